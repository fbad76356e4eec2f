//! Command-line front end: every experiment as a reproducible, seeded run
//! emitting CSV or JSON with a metadata header.

use clap::{Parser, Subcommand, ValueEnum};
use diagdesign::bitseq::MAX_QUBITS;
use diagdesign::circuits::{
    gate_count, quadratic_cost, CPhaseDecomposition, GateLine, PhaseRandomCircuitSpec,
};
use diagdesign::decay::decay_experiment;
use diagdesign::exact::{eta_asymptotic, eta_exact, mixing_curve, rational_to_f64};
use diagdesign::moments::{design_threshold, minimal_exact_r};
use diagdesign::{Error, Result};
use num::{BigRational, One, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde_json::{json, Value};
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::process::ExitCode;

const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Parser)]
#[command(name = "diagdesign", version, about = "Exact and Monte Carlo experiments on diagonal-unitary and state t-designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also print exact quantities as num/den rational strings.
    #[arg(long, global = true)]
    exact: bool,
    /// Seed for all sampled subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Exact trace distance between the Haar and phase-random moments.
    Eta {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
    },
    /// Minimal circuit locality r giving an exact design, by exhaustive search.
    DesignCheck {
        #[arg(long)]
        n: usize,
        /// Check a single design order.
        #[arg(long)]
        t: Option<usize>,
        /// Sweep design orders 2..=max_t (default 7 when --t is absent).
        #[arg(long = "max-t")]
        max_t: Option<usize>,
    },
    /// Monte Carlo decay of the distance under brickwork random layers.
    Decay {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Largest circuit depth (brickwork periods).
        #[arg(long = "max-t", default_value_t = 6)]
        max_t: usize,
    },
    /// Exact distance curve of the probabilistic mixing protocol.
    Mixing {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
    },
    /// Gate counts of the discrete decomposition at the threshold locality.
    Gatecount {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
    },
    /// Emit a sampled circuit as a gate-list text file.
    CircuitSample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        t: usize,
        /// Gate locality; defaults to the design threshold.
        #[arg(long)]
        r: Option<usize>,
        /// Emit continuous random-phase gates instead of the discrete set.
        #[arg(long)]
        continuous: bool,
    },
}

/// A generic tabular result rendered to CSV or JSON.
struct Table {
    command_line: String,
    seed: Option<u64>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
    footer: Vec<(&'static str, Value)>,
}

fn csv_field(value: &Value) -> String {
    let raw = match value {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

impl Table {
    fn render(&self, format: Format) -> String {
        let version = env!("CARGO_PKG_VERSION");
        match format {
            Format::Csv => {
                let mut out = String::new();
                let _ = writeln!(out, "# tool=diagdesign {version}");
                let _ = writeln!(out, "# command={}", self.command_line);
                if let Some(seed) = self.seed {
                    let _ = writeln!(out, "# seed={seed}");
                }
                let _ = writeln!(out, "{}", self.columns.join(","));
                for row in &self.rows {
                    let fields: Vec<String> = row.iter().map(csv_field).collect();
                    let _ = writeln!(out, "{}", fields.join(","));
                }
                for (key, value) in &self.footer {
                    let _ = writeln!(out, "# {key}={}", csv_field(value));
                }
                out
            }
            Format::Json => {
                let mut meta = serde_json::Map::new();
                meta.insert("tool".into(), json!("diagdesign"));
                meta.insert("version".into(), json!(version));
                meta.insert("command".into(), json!(self.command_line));
                if let Some(seed) = self.seed {
                    meta.insert("seed".into(), json!(seed));
                }
                let footer: serde_json::Map<String, Value> =
                    self.footer.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
                let doc = json!({
                    "meta": meta,
                    "columns": self.columns,
                    "rows": self.rows,
                    "footer": footer,
                });
                let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
                text.push('\n');
                text
            }
        }
    }
}

fn rational_value(x: &BigRational) -> Value {
    json!(x.to_string())
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!("n must be in 1..={MAX_QUBITS}, got {n}")));
    }
    Ok(())
}

fn cmd_eta(n: usize, t: usize, exact: bool) -> Result<Table> {
    check_qubits(n)?;
    if t == 0 || t > 40 {
        return Err(Error::InvalidArgument(format!("t must be in 1..=40, got {t}")));
    }
    let eta = eta_exact(n, t);
    let asymptotic = eta_asymptotic(n, t);
    let ratio: Value = if t >= 2 {
        let d = BigRational::from_integer((num::BigInt::one()) << n);
        let scale = BigRational::from_integer((t * (t - 1)).into());
        json!(rational_to_f64(&(d * &eta.value / scale)))
    } else {
        Value::Null
    };
    let mut columns = vec!["n", "t", "eta", "eta_asymptotic", "ratio_to_leading_order"];
    let mut row = vec![
        json!(n),
        json!(t),
        json!(rational_to_f64(&eta.value)),
        json!(rational_to_f64(&asymptotic)),
        ratio,
    ];
    if exact {
        columns.extend(["eta_rational", "eta_asymptotic_rational"]);
        row.extend([rational_value(&eta.value), rational_value(&asymptotic)]);
    }
    Ok(Table {
        command_line: format!("eta --n {n} --t {t}"),
        seed: None,
        columns,
        rows: vec![row],
        footer: vec![],
    })
}

fn cmd_design_check(n: usize, t: Option<usize>, max_t: Option<usize>) -> Result<Table> {
    check_qubits(n)?;
    if n > 6 {
        return Err(Error::InvalidArgument("exhaustive design check supports n <= 6".into()));
    }
    let orders: Vec<usize> = match (t, max_t) {
        (Some(t), None) => vec![t],
        (None, max) => (2..=max.unwrap_or(7)).collect(),
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument("give either --t or --max-t, not both".into()))
        }
    };
    let mut rows = Vec::new();
    for t in orders.iter().copied() {
        if t == 0 {
            return Err(Error::InvalidArgument("t must be at least 1".into()));
        }
        let (minimal, witnesses) = minimal_exact_r(n, t, DEFAULT_BUDGET)?;
        let witness: Value = witnesses
            .iter()
            .find(|(r, _, _)| *r + 1 == minimal)
            .map(|(_, a, b)| json!(format!("{a}|{b}")))
            .unwrap_or(Value::Null);
        rows.push(vec![
            json!(t),
            json!(minimal),
            json!(design_threshold(n, t)),
            witness,
        ]);
    }
    let command_line = match (t, max_t) {
        (Some(t), _) => format!("design-check --n {n} --t {t}"),
        (None, max) => format!("design-check --n {n} --max-t {}", max.unwrap_or(7)),
    };
    Ok(Table {
        command_line,
        seed: None,
        columns: vec!["t", "minimal_exact_r", "threshold", "witness_below_minimal"],
        rows,
        footer: vec![],
    })
}

fn cmd_decay(n: usize, t: usize, samples: usize, max_t: usize, seed: u64, exact: bool) -> Result<Table> {
    check_qubits(n)?;
    let result = decay_experiment(n, t, max_t, samples, seed, DEFAULT_BUDGET)?;
    let rows = result
        .points
        .iter()
        .map(|p| vec![json!(p.depth), json!(p.distance), json!(p.stderr)])
        .collect();
    let mut footer = vec![
        ("alpha", result.alpha.map(|a| json!(a)).unwrap_or(Value::Null)),
        ("r_squared", result.r_squared.map(|r| json!(r)).unwrap_or(Value::Null)),
        ("eta", json!(result.eta)),
    ];
    if exact {
        footer.push(("eta_rational", rational_value(&eta_exact(n, t).value)));
    }
    Ok(Table {
        command_line: format!("decay --n {n} --t {t} --samples {samples} --max-t {max_t}"),
        seed: Some(seed),
        columns: vec!["depth", "distance", "stderr"],
        rows,
        footer,
    })
}

fn cmd_mixing(n: usize, t: usize, exact: bool) -> Result<Table> {
    check_qubits(n)?;
    if t < 2 || t > 40 {
        return Err(Error::InvalidArgument(format!("t must be in 2..=40, got {t}")));
    }
    let curve = mixing_curve(n, t);
    let mut grid = vec![BigRational::zero()];
    grid.extend(curve.breakpoints.iter().cloned());
    grid.push(BigRational::one());
    grid.dedup();
    let mut rows = Vec::new();
    for p in &grid {
        let d = curve.eval(p);
        let mut row = vec![json!(rational_to_f64(p)), json!(rational_to_f64(&d))];
        if exact {
            row.extend([rational_value(p), rational_value(&d)]);
        }
        rows.push(row);
    }
    let improvement = &curve.d_at_one - &curve.d_at_p_star;
    let scale = BigRational::from_integer(num::BigInt::one() << (n * (t - 1)));
    let mut footer = vec![
        ("p_star", rational_value(&curve.p_star)),
        ("d_at_p_star", json!(rational_to_f64(&curve.d_at_p_star))),
        ("d_at_one", json!(rational_to_f64(&curve.d_at_one))),
        ("improvement", json!(rational_to_f64(&improvement))),
        ("scaled_improvement", json!(rational_to_f64(&(&scale * &improvement)))),
    ];
    if exact {
        footer.push(("d_at_p_star_rational", rational_value(&curve.d_at_p_star)));
        footer.push(("d_at_one_rational", rational_value(&curve.d_at_one)));
    }
    let mut columns = vec!["p", "distance"];
    if exact {
        columns.extend(["p_rational", "distance_rational"]);
    }
    Ok(Table {
        command_line: format!("mixing --n {n} --t {t}"),
        seed: None,
        columns,
        rows,
        footer,
    })
}

fn cmd_gatecount(n: usize, t: usize) -> Result<Table> {
    let gc = gate_count(n, t, quadratic_cost)?;
    let per_size: Vec<String> = gc.per_size.iter().map(|(s, c)| format!("{s}:{c}")).collect();
    Ok(Table {
        command_line: format!("gatecount --n {n} --t {t}"),
        seed: None,
        columns: vec![
            "n",
            "t",
            "r",
            "supports",
            "per_size",
            "total_cost_below_r",
            "total_cost_through_r",
        ],
        rows: vec![vec![
            json!(n),
            json!(t),
            json!(gc.r),
            json!(gc.supports.to_string()),
            json!(per_size.join(";")),
            json!(gc.total_below_r.to_string()),
            json!(gc.total_through_r.to_string()),
        ]],
        footer: vec![("cost_model", json!("s^2"))],
    })
}

fn cmd_circuit_sample(n: usize, t: usize, r: Option<usize>, continuous: bool, seed: u64) -> Result<String> {
    check_qubits(n)?;
    if t == 0 {
        return Err(Error::InvalidArgument("t must be at least 1".into()));
    }
    let r = r.unwrap_or_else(|| design_threshold(n, t));
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut out = String::new();
    let _ = writeln!(out, "# tool=diagdesign {}", env!("CARGO_PKG_VERSION"));
    let kind = if continuous { " --continuous" } else { "" };
    let _ = writeln!(out, "# command=circuit-sample --n {n} --t {t} --r {r}{kind}");
    let _ = writeln!(out, "# seed={seed}");
    if continuous {
        let spec = PhaseRandomCircuitSpec::new(n, r)?;
        for support in &spec.gate_supports {
            let phases: Vec<f64> = (0..1usize << r).map(|_| rng.random::<f64>() * TAU).collect();
            let line = GateLine::Diagonal { targets: support.clone(), phases };
            let _ = writeln!(out, "{}", line.render());
        }
    } else {
        let decomposition = CPhaseDecomposition::sample(n, t, r, &mut rng)?;
        for gate in decomposition.gates {
            let _ = writeln!(out, "{}", GateLine::ControlledPhase(gate).render());
        }
    }
    Ok(out)
}

fn emit(text: &str, out: Option<&std::path::Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let text = match cli.command {
        Command::Eta { n, t } => cmd_eta(n, t, cli.exact)?.render(cli.format),
        Command::DesignCheck { n, t, max_t } => cmd_design_check(n, t, max_t)?.render(cli.format),
        Command::Decay { n, t, samples, max_t } => {
            cmd_decay(n, t, samples, max_t, cli.seed, cli.exact)?.render(cli.format)
        }
        Command::Mixing { n, t } => cmd_mixing(n, t, cli.exact)?.render(cli.format),
        Command::Gatecount { n, t } => cmd_gatecount(n, t)?.render(cli.format),
        Command::CircuitSample { n, t, r, continuous } => {
            if cli.format == Format::Json {
                return Err(Error::InvalidArgument(
                    "circuit-sample emits the gate-list text format only".into(),
                ));
            }
            cmd_circuit_sample(n, t, r, continuous, cli.seed)?
        }
    };
    emit(&text, cli.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::BudgetExceeded { .. } => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}
