//! JSON file formats for norms, graph products, graphs of groups and loops.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use sclgap_core::gog::{Element, GogEdge, GraphOfGroups, GroupSpec, OrientedEdge, Subgroup, TightLoop};
use sclgap_core::graph_products::GraphProductSpec;
use sclgap_core::lattice::QVec;
use sclgap_core::norms::{NormValue, PolyhedralSeminorm};
use sclgap_core::rational::{fmt_q, parse_q};
use sclgap_core::{Alphabet, Order, SclCertificate, Q};

/// A rational written as an integer or a `"p/q"` string.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum RatJson {
    Int(i64),
    Text(String),
}

impl RatJson {
    pub fn to_q(&self) -> Result<Q> {
        match self {
            RatJson::Int(n) => Ok(Q::from_integer((*n).into())),
            RatJson::Text(s) => Ok(parse_q(s)?),
        }
    }
}

fn vecs(rows: &[Vec<RatJson>], dim: usize, what: &str) -> Result<Vec<QVec>> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != dim {
                bail!("{what}[{i}] has length {}, expected {dim}", r.len());
            }
            r.iter().map(RatJson::to_q).collect()
        })
        .collect()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct NormFile {
    pub dim: usize,
    /// Defaults to the span of the ball and the vanishing locus.
    #[serde(default)]
    pub domain: Option<Vec<Vec<RatJson>>>,
    #[serde(default)]
    pub vanishing: Vec<Vec<RatJson>>,
    pub ball_points: Vec<Vec<RatJson>>,
}

impl NormFile {
    pub fn to_norm(&self) -> Result<PolyhedralSeminorm> {
        let d = self.dim;
        let van = vecs(&self.vanishing, d, "vanishing")?;
        let pts = vecs(&self.ball_points, d, "ball_points")?;
        Ok(match &self.domain {
            Some(rows) => PolyhedralSeminorm::new(d, &vecs(rows, d, "domain")?, &van, &pts)?,
            None => PolyhedralSeminorm::from_ball(d, &pts, &van)?,
        })
    }
}

pub fn parse_norm(text: &str) -> Result<PolyhedralSeminorm> {
    let f: NormFile = serde_json::from_str(text).context("malformed norm file")?;
    f.to_norm()
}

/// Comma-separated rationals, e.g. `"0,1"` or `"1/2, -3"`.
pub fn parse_vector(s: &str) -> Result<QVec> {
    s.split(',').map(|t| Ok(parse_q(t.trim())?)).collect()
}

pub fn norm_value_str(v: &NormValue) -> String {
    match v {
        NormValue::Finite(x) => fmt_q(x),
        NormValue::Infinite => "inf".into(),
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum OrderJson {
    Finite(u32),
    /// `"inf"`.
    Text(String),
}

impl OrderJson {
    fn to_order(&self) -> Result<Order> {
        match self {
            OrderJson::Finite(0) => Ok(Order::Infinite),
            OrderJson::Finite(n) => Ok(Order::Finite(*n)),
            OrderJson::Text(s) if s == "inf" || s == "infinite" => Ok(Order::Infinite),
            OrderJson::Text(s) => bail!("bad order {s:?}"),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GpVertexJson {
    pub name: String,
    #[serde(default)]
    pub order: Option<OrderJson>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GraphProductFile {
    pub vertices: Vec<GpVertexJson>,
    #[serde(default)]
    pub edges: Vec<[String; 2]>,
}

impl GraphProductFile {
    pub fn to_spec(&self) -> Result<GraphProductSpec> {
        let names: Vec<&str> = self.vertices.iter().map(|v| v.name.as_str()).collect();
        let index = |n: &str| names.iter().position(|m| *m == n).ok_or_else(|| anyhow!("unknown vertex {n:?}"));
        let verts = self
            .vertices
            .iter()
            .map(|v| Ok((v.name.clone(), v.order.as_ref().map_or(Ok(Order::Infinite), OrderJson::to_order)?)))
            .collect::<Result<Vec<_>>>()?;
        let edges = self
            .edges
            .iter()
            .map(|[u, v]| Ok((index(u)?, index(v)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(GraphProductSpec::new(verts, &edges)?)
    }
}

pub fn parse_graph_product(text: &str) -> Result<GraphProductSpec> {
    let f: GraphProductFile = serde_json::from_str(text).context("malformed graph product file")?;
    f.to_spec()
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupJson {
    Cyclic { order: u32 },
    Integers,
    Lattice { rank: usize },
    Free { generators: Vec<String> },
    GraphProduct { spec: GraphProductFile },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubgroupJson {
    Multiples(i64),
    Sublattice(Vec<Vec<i64>>),
    Generated(Vec<String>),
    Special(Vec<String>),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GogVertexJson {
    pub id: String,
    pub group: GroupJson,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GogEdgeJson {
    pub id: String,
    pub origin: String,
    pub terminus: String,
    pub group: GroupJson,
    pub at_origin: SubgroupJson,
    pub at_terminus: SubgroupJson,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GogFile {
    pub vertices: Vec<GogVertexJson>,
    pub edges: Vec<GogEdgeJson>,
}

/// One arc of a loop and the edge leaving it.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct ArcJson {
    pub vertex: String,
    pub element: Value,
    pub edge: String,
    #[serde(default)]
    pub reversed: bool,
}

/// A parsed graph of groups with the naming needed to read loops.
#[derive(Clone, Debug)]
pub struct NamedGog {
    pub gog: GraphOfGroups,
    vertex_ids: Vec<String>,
    edge_ids: Vec<String>,
    /// Alphabets of free and graph product vertex groups.
    alphabets: BTreeMap<usize, Alphabet>,
}

fn group_spec(g: &GroupJson) -> Result<(GroupSpec, Option<Alphabet>)> {
    Ok(match g {
        GroupJson::Cyclic { order } => (GroupSpec::FiniteCyclic(*order), None),
        GroupJson::Integers => (GroupSpec::Integers, None),
        GroupJson::Lattice { rank } => (GroupSpec::Lattice(*rank), None),
        GroupJson::Free { generators } => {
            let names: Vec<&str> = generators.iter().map(String::as_str).collect();
            (GroupSpec::Free(names.len()), Some(Alphabet::free(&names)))
        }
        GroupJson::GraphProduct { spec } => {
            let s = spec.to_spec()?;
            let al = s.alphabet().clone();
            (GroupSpec::GraphProduct(s), Some(al))
        }
    })
}

fn subgroup(s: &SubgroupJson, al: Option<&Alphabet>) -> Result<Subgroup> {
    Ok(match s {
        SubgroupJson::Multiples(m) => Subgroup::Multiples(*m),
        SubgroupJson::Sublattice(rows) => Subgroup::Sublattice(rows.clone()),
        SubgroupJson::Generated(ws) => {
            let al = al.ok_or_else(|| anyhow!("generated subgroup needs a free vertex group"))?;
            Subgroup::Generated(ws.iter().map(|w| al.parse_word(w)).collect::<sclgap_core::Result<_>>()?)
        }
        SubgroupJson::Special(vs) => {
            let al = al.ok_or_else(|| anyhow!("special subgroup needs a graph product vertex group"))?;
            Subgroup::Special(vs.iter().map(|v| al.index_of(v)).collect::<sclgap_core::Result<_>>()?)
        }
    })
}

impl NamedGog {
    pub fn parse(text: &str) -> Result<Self> {
        let f: GogFile = serde_json::from_str(text).context("malformed graph of groups file")?;
        let mut vertices = Vec::new();
        let mut alphabets = BTreeMap::new();
        for (i, v) in f.vertices.iter().enumerate() {
            let (g, al) = group_spec(&v.group)?;
            vertices.push(g);
            if let Some(al) = al {
                alphabets.insert(i, al);
            }
        }
        let vertex_ids: Vec<String> = f.vertices.iter().map(|v| v.id.clone()).collect();
        let vid = |s: &str| vertex_ids.iter().position(|x| x == s).ok_or_else(|| anyhow!("unknown vertex {s:?}"));
        let mut edges = Vec::new();
        for e in &f.edges {
            let (o, t) = (vid(&e.origin)?, vid(&e.terminus)?);
            edges.push(GogEdge {
                origin: o,
                terminus: t,
                group: group_spec(&e.group)?.0,
                at_origin: subgroup(&e.at_origin, alphabets.get(&o))?,
                at_terminus: subgroup(&e.at_terminus, alphabets.get(&t))?,
            });
        }
        let edge_ids = f.edges.iter().map(|e| e.id.clone()).collect();
        Ok(NamedGog { gog: GraphOfGroups::new(vertices, edges)?, vertex_ids, edge_ids, alphabets })
    }

    fn element(&self, v: usize, x: &Value) -> Result<Element> {
        match (&self.gog.vertices[v], x) {
            (GroupSpec::Integers | GroupSpec::FiniteCyclic(_), Value::Number(n)) => {
                Ok(Element::Int(n.as_i64().ok_or_else(|| anyhow!("element {n} is not an integer"))?))
            }
            (GroupSpec::Lattice(_), Value::Array(_)) => Ok(Element::Vector(serde_json::from_value(x.clone())?)),
            (GroupSpec::Free(_) | GroupSpec::GraphProduct(_), Value::String(s)) => {
                Ok(Element::Word(self.alphabets[&v].parse_word(s)?))
            }
            _ => bail!("element {x} does not fit vertex {:?}", self.vertex_ids[v]),
        }
    }

    pub fn parse_loop(&self, text: &str) -> Result<TightLoop> {
        let arcs: Vec<ArcJson> = serde_json::from_str(text).context("malformed loop file")?;
        let mut out = TightLoop { arcs: Vec::new(), steps: Vec::new() };
        for a in &arcs {
            let v = self
                .vertex_ids
                .iter()
                .position(|x| *x == a.vertex)
                .ok_or_else(|| anyhow!("unknown vertex {:?}", a.vertex))?;
            let e = self.edge_ids.iter().position(|x| *x == a.edge).ok_or_else(|| anyhow!("unknown edge {:?}", a.edge))?;
            out.arcs.push((v, self.element(v, &a.element)?));
            out.steps.push(OrientedEdge { edge: e, reversed: a.reversed });
        }
        Ok(out)
    }
}

pub fn certificate_json(c: &SclCertificate) -> Value {
    json!({
        "bound": fmt_q(&c.bound),
        "kind": c.kind.as_str(),
        "witness": c.witness,
        "value": fmt_q(&c.value),
        "defect": fmt_q(&c.defect),
        "inputs": c.inputs,
        "notes": c.notes,
    })
}

/// Multi-line text form of a certificate.
pub fn certificate_text(c: &SclCertificate) -> String {
    let mut s = format!("bound {}\nkind {}\nwitness {}\n", fmt_q(&c.bound), c.kind.as_str(), c.witness);
    s += &format!("value {}\ndefect {}\n", fmt_q(&c.value), fmt_q(&c.defect));
    for (k, v) in &c.inputs {
        s += &format!("input {k} = {v}\n");
    }
    for n in &c.notes {
        s += &format!("note {n}\n");
    }
    s
}
