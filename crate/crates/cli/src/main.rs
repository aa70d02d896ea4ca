//! `fermispin`: build closed-shell sources, extract spin states and test them.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fermispin::census::census;
use fermispin::entanglement::{evaluate_inequalities, separability_bound};
use fermispin::fock::{
    build_closed_shell, collective_operator, qft_unitary, transform_to_extraction_basis, CollectiveKind,
    FockAmplitudeState, DENSE_MODE_LIMIT,
};
use fermispin::nbrdm::{block_decompose_spin, compute_nbrdm_direct, projector_decomposition, SpinDensityMatrix};
use fermispin::rdo::{block_decompose, partial_trace, verify_superselection, RdoBlockSet};
use fermispin::verify::{run_suite, SuiteConfig};
use fermispin::{Error, Result};
use serde_json::{json, Value};

use config::RunConfig;

const EXIT_CONFIG: u8 = 64;
const EXIT_CAPACITY: u8 = 65;

#[derive(Parser)]
#[command(name = "fermispin", version, about = "Spin states extracted from closed-shell fermionic states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Number of modes M.
    #[arg(long)]
    m: Option<usize>,
    /// Number of filled shells P.
    #[arg(long)]
    shells: Option<usize>,
    /// identity | qft | random | random:<seed> | file:<path>
    #[arg(long)]
    unitary: Option<String>,
    /// Comma-separated extraction modes.
    #[arg(long)]
    modes: Option<String>,
    /// Seed used by `--unitary random`.
    #[arg(long)]
    seed: Option<u64>,
    /// Structural tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Report the unnormalized nBRDM.
    #[arg(long)]
    raw: bool,
    /// Emit JSON.
    #[arg(long)]
    json: bool,
    /// Flat key=value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the source state and summarize it.
    Build {
        #[command(flatten)]
        common: Common,
        /// Also write the unitary to this file.
        #[arg(long)]
        write_unitary: Option<PathBuf>,
    },
    /// Block census for an n-mode subsystem.
    Census {
        n: usize,
        #[arg(long)]
        json: bool,
    },
    /// Reduced density operator and nBRDM of the extraction modes.
    Rdm {
        #[command(flatten)]
        common: Common,
    },
    /// Spin-squeezing inequalities on the extracted state.
    Entangle {
        #[command(flatten)]
        common: Common,
    },
    /// Invariant suite over the configured source, or the default corpus.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn emit(json_out: bool, value: &Value, text: impl FnOnce() -> String) {
    if json_out {
        println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialize"));
    } else {
        print!("{}", text());
    }
}

fn source(config: &RunConfig) -> Result<FockAmplitudeState> {
    let u = config.load_unitary()?;
    transform_to_extraction_basis(&build_closed_shell(config.shells, config.m)?, &u)
}

fn cmd_build(config: &RunConfig, write_unitary: Option<&PathBuf>) -> Result<u8> {
    let u = config.load_unitary()?;
    if let Some(path) = write_unitary {
        u.write_file(path)?;
    }
    let psi = transform_to_extraction_basis(&build_closed_shell(config.shells, config.m)?, &u)?;
    let twice_sz: f64 = psi.iter().map(|(b, a)| a.norm_sqr() * b.twice_sz() as f64).sum();
    let s_squared = if config.m <= DENSE_MODE_LIMIT {
        let v = psi.to_dense()?;
        Some(collective_operator(CollectiveKind::S2, config.m)?.expectation(&v).re)
    } else {
        None
    };
    let dim = 4f64.powi(config.m as i32);
    let value = json!({
        "unitary": config.unitary_name(),
        "m": config.m,
        "shells": config.shells,
        "norm": psi.norm(),
        "Ne": 2 * config.shells,
        "2Mz": twice_sz,
        "S2": s_squared,
        "nonzero": psi.len(),
        "sparsity": psi.len() as f64 / dim,
    });
    emit(config.json, &value, || {
        format!(
            "unitary {}  M={} P={}\nnorm     {:.12}\nN_e      {}\n2M_z     {:.12}\n<S^2>    {}\nnonzero  {} of {} ({:.3e})\n",
            config.unitary_name(),
            config.m,
            config.shells,
            psi.norm(),
            2 * config.shells,
            twice_sz,
            s_squared.map_or("n/a".into(), |s| format!("{s:.12}")),
            psi.len(),
            dim,
            psi.len() as f64 / dim
        )
    });
    Ok(0)
}

fn cmd_census(n: usize, json_out: bool) -> Result<u8> {
    let c = census(n)?;
    let value = serde_json::to_value(&c).expect("census serializes");
    emit(json_out, &value, || c.to_table());
    Ok(0)
}

fn extract(config: &RunConfig) -> Result<(RdoBlockSet, SpinDensityMatrix)> {
    let psi = source(config)?;
    let blocks = block_decompose(&partial_trace(&psi, &config.modes)?)?;
    let gamma = compute_nbrdm_direct(&psi, &config.modes)?;
    Ok((blocks, gamma))
}

fn format_matrix(m: &fermispin::spin::SpinMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| {
                let z = m[(r, c)];
                format!("{:>9.5}{:+.5}i", z.re + 0.0, z.im + 0.0)
            })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn cmd_rdm(config: &RunConfig) -> Result<u8> {
    let (blocks, raw) = extract(config)?;
    let superselection = verify_superselection(&blocks, config.tol);
    let gamma = if config.raw { raw.clone() } else { raw.normalized()? };
    let spin_blocks = block_decompose_spin(&gamma, config.tol)?;
    let decomposition = match projector_decomposition(&gamma) {
        Ok(d) => d.to_json(),
        Err(e) => json!({"not_applicable": e.to_string()}),
    };
    let separability = separability_bound(&blocks, 1e-12).ok();
    let value = json!({
        "unitary": config.unitary_name(),
        "m": config.m,
        "shells": config.shells,
        "rdo": blocks.to_json(),
        "superselection_passed": superselection.passed,
        "nbrdm": gamma.to_json(),
        "spin_blocks": spin_blocks.to_json(),
        "projector_decomposition": decomposition,
        "separability": separability.as_ref().map(|s| serde_json::to_value(s).expect("serializes")),
    });
    emit(config.json, &value, || {
        let mut out = format!(
            "modes {:?}  unitary {}  M={} P={}\n",
            config.modes,
            config.unitary_name(),
            config.m,
            config.shells
        );
        out.push_str(&format!(
            "RDO: {} stored blocks, {} populated, superselection {}\n",
            blocks.blocks.len(),
            blocks.populated(1e-12).count(),
            if superselection.passed { "ok" } else { "FAILED" }
        ));
        out.push_str(&format!(
            "nBRDM ({}), raw trace {:.12}\n",
            if config.raw { "raw" } else { "normalized" },
            gamma.raw_trace
        ));
        out.push_str(&format_matrix(&gamma.matrix));
        out.push_str(&format!(
            "{} (S,M) blocks, off-block residual {:.2e}, M spread {:.2e}\n",
            spin_blocks.blocks.len(),
            spin_blocks.off_block_residual,
            spin_blocks.m_spread
        ));
        for (&(s2, m2), b) in &spin_blocks.blocks {
            out.push_str(&format!("  2S={s2} 2M={m2:+} trace {:.12}\n", b.trace().re));
        }
        if let Some(s) = &separability {
            out.push_str(&s.description());
            out.push('\n');
        }
        out
    });
    Ok(0)
}

fn cmd_entangle(config: &RunConfig) -> Result<u8> {
    let (blocks, raw) = extract(config)?;
    let report = evaluate_inequalities(&raw)?;
    let separability = separability_bound(&blocks, 1e-12).ok();
    let value = json!({
        "report": report.to_json(),
        "separability": separability.as_ref().map(|s| serde_json::to_value(s).expect("serializes")),
    });
    emit(config.json, &value, || {
        let mut out = report.to_table();
        if let Some(s) = &separability {
            out.push_str(&s.description());
            out.push('\n');
        }
        out
    });
    Ok(report.verdict.exit_code() as u8)
}

fn cmd_verify(common: &Common, config: &RunConfig) -> Result<u8> {
    let suite = if common.unitary.is_some() || common.config.is_some() {
        SuiteConfig {
            sources: vec![(config.unitary_name(), config.load_unitary()?)],
            shells: config.shells,
            tol: config.tol,
        }
    } else {
        let mut suite = SuiteConfig::random_corpus(20)?;
        suite.sources.push(("qft".into(), qft_unitary(4)?));
        suite.tol = config.tol;
        suite
    };
    let results = run_suite(&suite)?;
    let passed = results.iter().all(|r| r.passed);
    let value = json!({"passed": passed, "checks": results});
    emit(config.json, &value, || {
        let mut out = String::new();
        for r in &results {
            let status = if r.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status} {}  {}\n", r.name, r.detail));
        }
        out.push_str(&format!(
            "{} of {} checks passed\n",
            results.iter().filter(|r| r.passed).count(),
            results.len()
        ));
        out
    });
    Ok(if passed { 0 } else { 1 })
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Capacity(_) => EXIT_CAPACITY,
        Error::InvalidConfiguration(_)
        | Error::InvalidArguments(_)
        | Error::InvalidKey(_)
        | Error::IndexOutOfRange { .. }
        | Error::Parse(_)
        | Error::Io(_) => EXIT_CONFIG,
        _ => 1,
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Build { common, write_unitary } => cmd_build(&RunConfig::resolve(&common)?, write_unitary.as_ref()),
        Command::Census { n, json } => cmd_census(n, json),
        Command::Rdm { common } => cmd_rdm(&RunConfig::resolve(&common)?),
        Command::Entangle { common } => cmd_entangle(&RunConfig::resolve(&common)?),
        Command::Verify { common } => {
            let config = RunConfig::resolve(&common)?;
            cmd_verify(&common, &config)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
