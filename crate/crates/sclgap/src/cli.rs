//! Argument parsing and command dispatch for the `sclgap` binary.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use sclgap_core::brooks::chain_gap_certificate;
use sclgap_core::circle::{extremal_certificate, f2, rot_bar, AltWord};
use sclgap_core::circle_words::{enumerate, rho_b_action, rot_m, RotM};
use sclgap_core::gog::{
    baumslag_solitar, bs_alphabet, bs_tight_loop, gap_hyperbolic, rtf_brute_force_cyclic, Element, GapReport, GroupSpec,
    GraphOfGroups, Subgroup, TightLoop,
};
use sclgap_core::graph_products::{gp_gap, ExactScl, GpGapOutcome};
use sclgap_core::norms::{edge_scl_amalgam, lattice_gap};
use sclgap_core::rational::fmt_q;
use sclgap_core::{Alphabet, Order};

use crate::acceptance::{run_all, Fixtures};
use crate::formats::{
    certificate_json, certificate_text, norm_value_str, parse_graph_product, parse_norm, parse_vector, NamedGog,
};

#[derive(Debug, Parser)]
#[command(name = "sclgap", version, about = "Certified lower bounds for stable commutator length")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Number of random trials for sampling commands.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Search depth for brute-force confirmations.
    #[arg(long, global = true)]
    pub kmax: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotation quasimorphism of a word for an alternating base.
    Rot {
        #[arg(long)]
        base: String,
        #[arg(long)]
        word: String,
    },
    /// Circle quasimorphism certificate built from the word itself.
    Extremal {
        #[arg(long)]
        word: String,
    },
    /// Brooks counting certificate for a chain in a free product of cyclic groups.
    Brooks {
        #[arg(long, default_value = "a b")]
        alphabet: String,
        #[arg(long)]
        chain: String,
    },
    /// Relative gap for a tight loop in a graph of groups.
    Gap {
        #[arg(long)]
        gog: Option<PathBuf>,
        #[arg(long = "loop")]
        loop_file: Option<PathBuf>,
        /// Baumslag-Solitar parameters `m,l`, used with `--word`.
        #[arg(long, conflicts_with_all = ["gog", "loop_file"])]
        bs: Option<String>,
        #[arg(long, requires = "bs")]
        word: Option<String>,
    },
    /// Gap certificate for a word in a graph product of cyclic groups.
    Graphproduct {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        word: String,
    },
    /// scl of an edge-group vector in an amalgam, from the two vertex norms.
    Edgenorm {
        #[arg(long = "normA")]
        norm_a: PathBuf,
        #[arg(long = "normB")]
        norm_b: PathBuf,
        #[arg(long)]
        vector: String,
    },
    /// Smallest nonzero norm of an integer vector.
    Latticegap {
        #[arg(long)]
        norm: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
    },
    /// Lists circle words of bounded length in increasing order.
    Circlewords {
        #[arg(long = "M")]
        m: usize,
        #[arg(long)]
        enumerate: usize,
    },
    /// Compares the circle-word and integer rotation numbers on random words.
    Crosscheck {
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 20)]
        max_len: usize,
    },
    /// Runs the acceptance suite.
    Selftest,
}

/// Result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: 2, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match execute(&cli) {
        Ok((code, stdout)) => Outcome { code, stdout, stderr: String::new() },
        Err(e) => Outcome { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e:#}\n") },
    }
}

/// 2 for bad input, 1 for internal failures.
fn exit_code(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<sclgap_core::Error>() {
        Some(c) if !c.is_precondition() => 1,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn render(cli: &Cli, text: String, value: Value) -> String {
    if cli.json {
        let mut s = serde_json::to_string_pretty(&value).expect("serializable");
        s.push('\n');
        s
    } else {
        text
    }
}

fn execute(cli: &Cli) -> Result<(i32, String)> {
    let out = match &cli.command {
        Command::Rot { base, word } => {
            let b = AltWord::parse(base)?;
            let w = f2().parse_word(word)?;
            let r = rot_bar(&b, &w)?;
            render(cli, format!("{}\n", fmt_q(&r)), json!({"base": b.format(), "word": word, "rot": fmt_q(&r)}))
        }
        Command::Extremal { word } => {
            let cert = extremal_certificate(&f2().parse_word(word)?)?;
            let base = cert.inputs.get("base").cloned().unwrap_or_default();
            let text = format!(
                "base {base}\nvalue {}\ndefect {}\nbound {}\n",
                fmt_q(&cert.value),
                fmt_q(&cert.defect),
                fmt_q(&cert.bound)
            );
            let mut v = certificate_json(&cert);
            v["base"] = json!(base);
            render(cli, text, v)
        }
        Command::Brooks { alphabet, chain } => {
            let al = Alphabet::parse(alphabet)?;
            let cert = chain_gap_certificate(&al, &al.parse_chain(chain)?)?;
            render(cli, certificate_text(&cert), certificate_json(&cert))
        }
        Command::Gap { gog, loop_file, bs, word } => {
            let (g, lp) = match (gog, loop_file, bs, word) {
                (Some(g), Some(l), None, None) => {
                    let named = NamedGog::parse(&read(g)?)?;
                    let lp = named.parse_loop(&read(l)?)?;
                    (named.gog, lp)
                }
                (None, None, Some(ml), Some(w)) => {
                    let (m, l) = parse_pair(ml)?;
                    (baumslag_solitar(m, l)?, bs_tight_loop(m, l, &bs_alphabet().parse_word(w)?)?)
                }
                _ => bail!("give either --gog and --loop, or --bs and --word"),
            };
            let rep = gap_hyperbolic(&g, &lp)?;
            let confirmed = match cli.kmax {
                Some(k) => Some(confirm_cyclic_arcs(&g, &lp, &rep, k)?),
                None => None,
            };
            gap_output(cli, &rep, confirmed)
        }
        Command::Graphproduct { spec, word } => {
            let s = parse_graph_product(&read(spec)?)?;
            let w = s.parse_word(word)?;
            match gp_gap(&s, &w)? {
                GpGapOutcome::Exact(e) => {
                    let v = match e {
                        ExactScl::Zero => "0",
                        ExactScl::Infinite => "inf",
                    };
                    render(cli, format!("exact {v}\n"), json!({"exact": v}))
                }
                GpGapOutcome::Bound(cert) => render(cli, certificate_text(&cert), certificate_json(&cert)),
                GpGapOutcome::Inapplicable(why) => {
                    render(cli, format!("inapplicable: {why}\n"), json!({"inapplicable": why}))
                }
            }
        }
        Command::Edgenorm { norm_a, norm_b, vector } => {
            let a = parse_norm(&read(norm_a)?).context("normA")?;
            let b = parse_norm(&read(norm_b)?).context("normB")?;
            let c = parse_vector(vector)?;
            if c.len() != a.dim() || a.dim() != b.dim() {
                bail!("dimension mismatch: normA {}, normB {}, vector {}", a.dim(), b.dim(), c.len());
            }
            let v = norm_value_str(&edge_scl_amalgam(&a, &b, &c)?);
            render(cli, format!("{v}\n"), json!({"vector": vector, "edge_scl": v}))
        }
        Command::Latticegap { norm, budget } => {
            let n = parse_norm(&read(norm)?)?;
            let g = lattice_gap(&n, *budget)?;
            let wit: Vec<String> = g.witness.iter().map(|t| t.to_string()).collect();
            let text = format!("gap {}\nwitness ({})\nsearched {}\n", fmt_q(&g.gap), wit.join(", "), g.searched);
            render(cli, text, json!({"gap": fmt_q(&g.gap), "witness": wit, "searched": g.searched}))
        }
        Command::Circlewords { m, enumerate: k } => {
            if *m < 2 {
                bail!("M must be at least 2");
            }
            let ws = enumerate(*m, *k);
            let mut text = String::new();
            let mut rows = Vec::new();
            for w in &ws {
                writeln!(text, "{}\t{}", w.format_word(), w.lambda()).expect("string");
                rows.push(json!({"word": w.format_word(), "lambda": w.lambda()}));
            }
            render(cli, text, json!({"M": m, "k": k, "words": rows}))
        }
        Command::Crosscheck { base, max_len } => {
            let b = AltWord::parse(base)?;
            let al = f2();
            let trials = cli.trials.unwrap_or(100);
            let n_max = cli.kmax.unwrap_or(2000) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let mut bad = Vec::new();
            for _ in 0..trials {
                let w = al.random_word(&mut rng, *max_len);
                let want = rot_bar(&b, &w)?;
                let got = rot_m(&rho_b_action(&b, &al, &w), n_max)?;
                if got != RotM::Exact(want.clone()) {
                    bad.push(json!({"word": al.format_word(&w), "integer": fmt_q(&want), "circle_words": format!("{got:?}")}));
                }
            }
            let text = format!("{}/{trials} agree\n", trials - bad.len());
            let out = render(cli, text, json!({"trials": trials, "mismatches": bad}));
            return Ok((if bad.is_empty() { 0 } else { 1 }, out));
        }
        Command::Selftest => {
            let results = run_all(&Fixtures::default(), cli.seed);
            let failed = results.iter().filter(|r| !r.passed).count();
            let mut text = String::new();
            for r in &results {
                writeln!(text, "{}", r.line()).expect("string");
            }
            writeln!(text, "{} of {} criteria passed", results.len() - failed, results.len()).expect("string");
            let rows: Vec<Value> =
                results.iter().map(|r| json!({"id": r.id, "name": r.name, "passed": r.passed, "detail": r.detail})).collect();
            let out = render(cli, text, json!({"criteria": rows, "failed": failed}));
            return Ok((if failed == 0 { 0 } else { 1 }, out));
        }
    };
    Ok((0, out))
}

fn parse_pair(s: &str) -> Result<(i64, i64)> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("expected m,l but got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// Confirms the closed-form orders of cyclic arcs by search up to `k_max`.
fn confirm_cyclic_arcs(g: &GraphOfGroups, lp: &TightLoop, rep: &GapReport, k_max: u32) -> Result<usize> {
    let mut n = 0;
    for (i, cert) in &rep.arcs {
        let (v, Element::Int(x)) = &lp.arcs[*i] else { continue };
        let e = &g.edges[lp.steps[*i].edge];
        let sub = if lp.steps[*i].reversed { &e.at_terminus } else { &e.at_origin };
        let Subgroup::Multiples(m) = sub else { continue };
        // (Z, mZ) torsion is torsion in Z/m; (Z/o, <d>) is searched directly
        let brute = match &g.vertices[*v] {
            GroupSpec::Integers => rtf_brute_force_cyclic(m.unsigned_abs() as u32, 0, *x, k_max)?,
            GroupSpec::FiniteCyclic(o) => rtf_brute_force_cyclic(*o, *m, *x, k_max)?,
            _ => continue,
        };
        let agrees = match (cert.n, brute.n) {
            (Order::Finite(a), Order::Finite(b)) => a == b || (a >= k_max && b == k_max),
            (Order::Infinite, Order::Finite(b)) => b == k_max,
            _ => false,
        };
        if !agrees {
            return Err(sclgap_core::Error::OracleViolation(format!("arc {i}: search disagrees with {cert}")).into());
        }
        n += 1;
    }
    Ok(n)
}

fn gap_output(cli: &Cli, rep: &GapReport, confirmed: Option<usize>) -> String {
    let mut text = certificate_text(&rep.certificate);
    for (i, c) in &rep.arcs {
        writeln!(text, "arc {i}: {c}").expect("string");
    }
    if let Some(n) = confirmed {
        writeln!(text, "search confirmed {n} cyclic arcs up to k = {}", cli.kmax.unwrap_or_default()).expect("string");
    }
    let arcs: Vec<Value> = rep.arcs.iter().map(|(i, c)| json!({"arc": i, "rtf": c.to_string()})).collect();
    let mut v = certificate_json(&rep.certificate);
    v["arcs"] = json!(arcs);
    if let Some(n) = confirmed {
        v["search_confirmed"] = json!(n);
    }
    render(cli, text, v)
}
