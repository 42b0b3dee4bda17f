use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use holoball_core::classes::{class_constant_estimate, default_family, membership_verdict, ClassSpec, Verdict, VerdictThresholds};
use holoball_core::geometry::{ball_measure_mc, ball_measure_model, Quantifier};
use holoball_core::integration::{forelli_rudin_exponent, DEFAULT_FR_RADII};
use holoball_core::kernels::{kernel_bounds_scan, kernel_of_inner, kernel_series, KernelParams, MaxBound, SeriesControl};
use holoball_core::operators::{OperatorSpec, TestFunction};
use holoball_core::weights::parse_weight;
use holoball_core::{Ball, Point, Weight};

use holoball_experiments::config::Budgets;
use holoball_experiments::experiments::{default_gammas, good_lambda_experiment, op_norm_ratios, weak_type_experiment, GoodLambdaParams, NormBudget};
use holoball_experiments::runner::{exit_status, run_config, ExitStatus};
use holoball_experiments::{emit_report, Error, Format, Report, Result};

#[derive(Parser)]
#[command(name = "holoball", version, about = "Numerical experiments with Bergman-type operators on the unit ball")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Global {
    /// Base seed for all random streams.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Monte Carlo sample budget.
    #[arg(long, global = true, default_value_t = 4000)]
    samples: usize,
    /// Directory for report files (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario of a JSON config.
    Run { config: PathBuf },
    /// Series against closed form, and bounds of `|K_q|` over the disk.
    KernelCheck {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        q: f64,
    },
    /// Monte Carlo ball measure against the product model.
    BallMeasure {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        q: f64,
        /// `|c|` of the center `c = r e_1`.
        #[arg(long, default_value_t = 0.9)]
        center: f64,
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
    },
    /// Growth exponent of the Forelli-Rudin integral.
    ForelliRudin {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long, allow_hyphen_values = true)]
        d: f64,
    },
    /// Class constant and membership verdict of a weight.
    WeightClass {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        /// bp | bpabqq | kp | dp | ap
        #[arg(long)]
        class: String,
        /// Comma-separated `name=value` pairs, e.g. `p=2,a=0`.
        #[arg(long, allow_hyphen_values = true)]
        params: String,
        #[arg(long, default_value = "1")]
        weight: String,
        #[arg(long, default_value_t = 6)]
        balls: u32,
    },
    /// Lower bounds on the weighted norm of `T_{a,b}` from test functions.
    OpNorm {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        q: f64,
        #[arg(long = "Q", default_value_t = 0.0, allow_hyphen_values = true)]
        big_q: f64,
        #[arg(long, default_value = "1")]
        weight: String,
    },
    /// Weak-type and strong-type ratios of `P_{s,t}` on `L^1_s`.
    WeakType {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 0.25, allow_hyphen_values = true)]
        t: f64,
    },
    /// Good-lambda decay exponent.
    GoodLambda {
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        q: f64,
        #[arg(long = "Q", default_value_t = 0.0, allow_hyphen_values = true)]
        big_q: f64,
        #[arg(long, default_value = "1")]
        weight: String,
    },
}

fn parse_params(text: &str) -> Result<std::collections::HashMap<String, f64>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("`{kv}` is not name=value")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("`{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn weight(expr: &str) -> Result<Weight> {
    parse_weight(expr).map_err(|e| Error::Config(e.to_string()))
}

fn kernel_check(g: &Global, dim: usize, q: f64) -> Result<Report> {
    let params = KernelParams::new(dim, q)?;
    let mut rep = Report::new("kernel-check", "cli");
    let scan = kernel_bounds_scan(&params, 64)?;
    rep.exact("min_modulus", scan.min_modulus);
    match scan.max_modulus {
        MaxBound::Finite(m) => rep.exact("max_modulus", m),
        MaxBound::Unbounded => rep.exact("max_modulus", f64::INFINITY),
    };
    rep.exact("rho0", scan.rho0_estimate);
    let ctl = SeriesControl::default();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut worst = 0.0f64;
    for _ in 0..g.samples.min(1000) {
        let v = Complex::from_polar(0.95 * rng.random::<f64>().sqrt(), std::f64::consts::TAU * rng.random::<f64>());
        let a = kernel_series(&params, v, &ctl)?;
        let b = kernel_of_inner(&params, v, &ctl)?;
        worst = worst.max((a - b).norm() / b.norm());
    }
    rep.exact("series_max_rel_diff", worst);
    rep.rule("series_agrees", worst < 1e-10, format!("{worst:.3e}"));
    Ok(rep)
}

fn ball_measure(g: &Global, dim: usize, q: f64, center: f64, radius: f64) -> Result<Report> {
    let b = Ball::new(Point::on_axis(dim, center)?, radius)?;
    let mc = ball_measure_mc(&b, q, g.samples, g.seed)?;
    let model = ball_measure_model(&b, q)?;
    let mut rep = Report::new("ball-measure", "cli");
    rep.estimate("mc", &mc).exact("model", model).fitted("ratio", mc.value / model, g.samples, g.seed);
    Ok(rep)
}

fn forelli_rudin(g: &Global, dim: usize, c: f64, d: f64) -> Result<Report> {
    let fit = forelli_rudin_exponent(c, d, dim, &DEFAULT_FR_RADII, g.samples, g.seed)?;
    let mut rep = Report::new("forelli-rudin", "cli");
    for (r, v) in fit.radii.iter().zip(&fit.values) {
        rep.estimate(format!("integral_r_{r}"), v);
    }
    rep.fitted("exponent", fit.fitted_exponent, g.samples, g.seed);
    rep.exact("expected", (c - d).max(0.0)).exact("log_flag", if fit.log_flag { 1.0 } else { 0.0 });
    Ok(rep)
}

fn weight_class(g: &Global, dim: usize, class: &str, params: &str, w: &str, balls: u32) -> Result<Report> {
    let prm = parse_params(params)?;
    let get = |k: &str| prm.get(k).copied().ok_or_else(|| Error::Config(format!("missing parameter `{k}`")));
    let spec = match class {
        "bp" => ClassSpec::bp(dim, get("p")?, get("a")?, Quantifier::BoundaryTouching)?,
        "bpabqq" => ClassSpec::bp_abqq(dim, get("p")?, get("a")?, get("b")?, get("q")?, get("Q")?)?,
        "kp" => ClassSpec::kp(dim, get("p")?, get("s")?, get("t")?, get("q")?, get("Q")?)?,
        "dp" => ClassSpec::dp(dim, get("p")?, get("s")?, get("t")?, get("q")?, get("Q")?)?,
        "ap" => ClassSpec::ap_alpha(dim, get("p")?, get("alpha")?)?,
        other => return Err(Error::Config(format!("unknown class `{other}` (bp|bpabqq|kp|dp|ap)"))),
    };
    let w = weight(w)?;
    let cr = class_constant_estimate(&spec, &w, &default_family(&spec, balls), g.samples, g.seed)?;
    let verdict = membership_verdict(&cr, &VerdictThresholds::default());
    let mut rep = Report::new("weight-class", "cli");
    for (b, v) in &cr.per_ball {
        match v {
            holoball_core::classes::ClassValue::Finite(e) => rep.estimate(format!("ball_c{:.4}_R{:.4}", b.center.modulus(), b.radius), e),
            holoball_core::classes::ClassValue::Infinite => rep.exact(format!("ball_c{:.4}_R{:.4}", b.center.modulus(), b.radius), f64::INFINITY),
        };
    }
    rep.exact("supremum", cr.supremum.value());
    if let Some(s) = cr.divergence_slope {
        rep.fitted("divergence_slope", s, g.samples, g.seed);
    }
    rep.verdict(match verdict {
        Verdict::Member => "member",
        Verdict::NonMember => "non_member",
        Verdict::Inconclusive => "inconclusive",
    });
    Ok(rep)
}

fn op_norm(g: &Global, dim: usize, a: f64, b: f64, p: f64, q: f64, big_q: f64, w: &str) -> Result<Report> {
    let spec = OperatorSpec::t(dim, a, b)?.with_spaces(p, q, big_q, weight(w)?)?;
    let mut alpha = vec![0u32; dim];
    alpha[0] = 1;
    let family =
        [("one", TestFunction::constant(dim, 1.0)), ("z1", TestFunction::monomial(alpha)), ("extremal", TestFunction::extremal(&spec.weight, p, b, q, None))];
    let fns: Vec<_> = family.iter().map(|x| x.1.clone()).collect();
    let ratios = op_norm_ratios(&spec, &fns, NormBudget { outer: g.samples, inner: g.samples }, g.seed)?;
    let mut rep = Report::new("op-norm", "cli");
    for ((label, _), r) in family.iter().zip(&ratios) {
        match r {
            Some(r) => rep.estimate(format!("ratio_{label}"), r),
            None => rep.exact(format!("ratio_{label}"), f64::NAN).verdict("not_in_source_space"),
        };
    }
    Ok(rep)
}

fn budgets(g: &Global) -> Budgets {
    Budgets { n: g.samples, grid: g.samples, ..Budgets::default() }
}

fn execute(cli: &Cli) -> Result<Vec<Report>> {
    let g = &cli.global;
    Ok(match &cli.command {
        Command::Run { config } => run_config(config)?,
        Command::KernelCheck { dim, q } => vec![kernel_check(g, *dim, *q)?],
        Command::BallMeasure { dim, q, center, radius } => vec![ball_measure(g, *dim, *q, *center, *radius)?],
        Command::ForelliRudin { dim, c, d } => vec![forelli_rudin(g, *dim, *c, *d)?],
        Command::WeightClass { dim, class, params, weight, balls } => vec![weight_class(g, *dim, class, params, weight, *balls)?],
        Command::OpNorm { dim, a, b, p, q, big_q, weight } => vec![op_norm(g, *dim, *a, *b, *p, *q, *big_q, weight)?],
        Command::WeakType { dim, s, t } => vec![weak_type_experiment(*dim, *s, *t, *s, &budgets(g), "weak-type", "cli", g.seed)?],
        Command::GoodLambda { dim, s, t, p, q, big_q, weight: w } => {
            let gp = GoodLambdaParams { dim: *dim, s: *s, t: *t, q: *q, big_q: *big_q, p: *p };
            vec![good_lambda_experiment(gp, &weight(w)?, &default_gammas(), &budgets(g), "good-lambda", "cli", g.seed)?]
        }
    })
}

fn write_reports(g: &Global, reports: &[Report]) -> Result<()> {
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let name = match g.format {
                Format::Csv => "report.csv",
                Format::Json => "report.json",
            };
            emit_report(reports, g.format, File::create(dir.join(name))?)
        }
        None => {
            let mut out = std::io::stdout().lock();
            emit_report(reports, g.format, &mut out)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = execute(&cli);
    let status = exit_status(&outcome);
    match outcome {
        Ok(reports) => {
            if let Err(e) = write_reports(&cli.global, &reports) {
                eprintln!("holoball: {e}");
                return ExitCode::from(ExitStatus::Failure as u8);
            }
            for r in reports.iter().filter(|r| !r.passed()) {
                for rule in r.rules.iter().filter(|x| !x.passed) {
                    eprintln!("FAIL {} {}: {}", r.scenario, rule.name, rule.detail);
                }
            }
        }
        Err(e) => eprintln!("holoball: {e}"),
    }
    ExitCode::from(status as u8)
}
