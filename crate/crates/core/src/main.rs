//! Command-line driver: runs declarative scan configs, lists presets,
//! validates configs, and evaluates the closed-form two-level solution.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

use rabisim::atomics::{make_preset, PRESET_NAMES};
use rabisim::config::{ExperimentConfig, OutputFormat, ScanKind};
use rabisim::error::{Error, Result};
use rabisim::oracle::{cw_ground_population, cw_phase, cw_population, TwoLevelParams};
use rabisim::scan::{emit, prepare, run, Prepared};

#[derive(Parser)]
#[command(
    name = "rabisim",
    about = "Rabi oscillations of a ground state ↔ excited wavepacket driven by shaped femtosecond pulses",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scan described by a config file and write the output files.
    Run {
        /// Path to a TOML experiment config.
        config: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Worker threads for scan points (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also write the shaped spectrum (wavelength, Re, Im, |A|).
        #[arg(long)]
        emit_spectrum: bool,
        /// Also write the synthesized envelope (t, Re, Im, |ε|).
        #[arg(long)]
        emit_envelope: bool,
    },
    /// List the built-in atomic presets.
    Presets,
    /// Parse and validate a config, including the field synthesis checks.
    Validate { config: PathBuf },
    /// Evaluate the closed-form two-level solution at constant drive:
    /// excited/ground populations and phase for Ω₀, Δ (rad/fs) at t (fs).
    Oracle {
        #[arg(allow_negative_numbers = true)]
        rabi: f64,
        #[arg(allow_negative_numbers = true)]
        detuning: f64,
        t: f64,
    },
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, workers, emit_spectrum, emit_envelope } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            match workers {
                Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("worker pool: {e}")))?
                    .install(|| run_command(&cfg, &out, emit_spectrum, emit_envelope)),
                _ => run_command(&cfg, &out, emit_spectrum, emit_envelope),
            }
        }
        Command::Presets => {
            for name in PRESET_NAMES {
                let sys = make_preset::<f64>(name)?;
                println!("{name}");
                for (k, lv) in sys.levels().iter().enumerate() {
                    if k == 0 {
                        println!("  {}  (ground)", lv.label);
                    } else {
                        println!(
                            "  {}  {:.2} nm  dipole {:.3e} C·m",
                            lv.label,
                            sys.transition_nm(k)?,
                            sys.dipole_to(k).unwrap_or(0.0)
                        );
                    }
                }
                if sys.n_excited() == 2 {
                    println!("  splitting {:.3} THz", sys.splitting(1, 2)?);
                }
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            // full synthesis catches grid/window adequacy problems too
            prepare::<f64>(&cfg)?;
            println!("OK: {}", config.display());
            Ok(())
        }
        Command::Oracle { rabi, detuning, t } => {
            let p = TwoLevelParams::new(rabi, detuning)?;
            println!("excited_population {:.12e}", cw_population(&p, t));
            println!("ground_population  {:.12e}", cw_ground_population(&p, t));
            println!("phase_rad          {:.12e}", cw_phase(&p, t));
            Ok(())
        }
    }
}

fn run_command(
    cfg: &ExperimentConfig,
    out: &Path,
    emit_spectrum: bool,
    emit_envelope: bool,
) -> Result<()> {
    let io_err = |p: &Path| {
        let path = p.display().to_string();
        move |e: std::io::Error| Error::Io { path: path.clone(), source: e }
    };
    std::fs::create_dir_all(out).map_err(io_err(out))?;

    let prep: Prepared<f64> = prepare(cfg)?;
    if emit_spectrum {
        let p = out.join(format!("{}_spectrum.csv", cfg.output.basename));
        let mut text = String::from("wavelength_nm,re_v_fs_per_m,im_v_fs_per_m,abs\n");
        for k in 0..prep.spectral.amplitude.len() {
            let a = prep.spectral.amplitude[k];
            text.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                rabisim::units::nm_from_omega(prep.spectral.abs_omega(k)),
                a.re,
                a.im,
                a.norm()
            ));
        }
        std::fs::write(&p, text).map_err(io_err(&p))?;
        println!("wrote {}", p.display());
    }
    if emit_envelope {
        let p = out.join(format!("{}_envelope.csv", cfg.output.basename));
        let mut text = String::from("t_fs,re_v_per_m,im_v_per_m,abs\n");
        for (j, e) in prep.temporal.envelope.iter().enumerate() {
            text.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                prep.temporal.time(j),
                e.re,
                e.im,
                e.norm()
            ));
        }
        std::fs::write(&p, text).map_err(io_err(&p))?;
        println!("wrote {}", p.display());
    }

    let output = run::<f64>(cfg)?;
    let ext = match cfg.output.format {
        OutputFormat::Csv => "csv",
        OutputFormat::GnuplotMatrix => "dat",
    };
    let path = out.join(format!("{}.{ext}", cfg.output.basename));
    emit(&output.grid, &path, cfg.output.format)?;
    println!("wrote {}", path.display());

    if cfg.scan.kind == ScanKind::RbEnergy {
        if let Some(fit) = &output.fit {
            let e_min = fit.first_minimum_energy();
            println!("fit: k = {:.6e} rad/sqrt(J)", fit.k);
            println!("fit: first minimum at E = {:.6e} J (area 2π)", e_min);
            println!(
                "fit: area at max scan energy = {:.4}π",
                fit.k * cfg.energy_axis()?.max_j.sqrt() / std::f64::consts::PI
            );
        }
    }
    Ok(())
}
