use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command as ClapCommand};

use deffuant::cli_io::{self, CliError, Command, Settings};

const RUN_KEYS: &[&str] = &[
    "n", "degree", "d", "mu", "steps", "window", "p", "alpha", "profile", "scheme", "init", "seed",
    "bins", "min-peak-frac", "min-peak-sep", "out", "name", "network",
];
const SWEEP_KEYS: &[&str] = &[
    "n", "degree", "d-start", "d-end", "d-step", "mu", "steps", "window", "p", "alpha", "profile",
    "scheme", "init", "replicates", "seed", "bins", "workers", "min-peak-frac", "min-peak-sep",
    "out", "name",
];
const GEN_NET_KEYS: &[&str] = &["n", "degree", "seed", "out", "name"];

fn help(key: &str) -> &'static str {
    match key {
        "n" => "number of agents [default: 10000]",
        "degree" => "mean degree of the Erdos-Renyi network [default: 10]",
        "d" => "confidence bound d in (0, 1]",
        "d-start" => "first d of the sweep [default: 0.1]",
        "d-end" => "last d of the sweep [default: 0.75]",
        "d-step" => "d increment [default: 0.005]",
        "mu" => "convergence parameter in (0, 0.5] [default: 0.5]",
        "steps" => "events per simulation, e.g. 5e7 [default: 50000000]",
        "window" => "final steps averaged into the distribution [default: 1000]",
        "p" => "base mutation probability [default: 0.01]",
        "alpha" => "slope of the mutation profile [default: 0]",
        "profile" => "mutation profile: uniform | asym | sym [default: uniform]",
        "scheme" => "or: mutate or interact per event; and: both [default: or]",
        "init" => "initial opinions: uniform | const:<c> | twodelta:<a>,<b> [default: uniform]",
        "replicates" => "independent networks per d [default: 10]",
        "seed" => "master seed [default: 1]",
        "bins" => "histogram bins over [0, 1] [default: 200]",
        "workers" => "worker threads [default: available cores]",
        "min-peak-frac" => "peaks below this fraction of the maximum are ignored [default: 0.2]",
        "min-peak-sep" => "smoothing width and minimum peak spacing in bins [default: 9]",
        "out" => "output root directory [default: out]",
        "name" => "subdirectory of --out for this invocation [default: command name]",
        "network" => "edge-list file to use instead of generating a network",
        _ => "",
    }
}

fn value_args(keys: &[&'static str]) -> Vec<Arg> {
    keys.iter()
        .map(|&k| {
            Arg::new(k)
                .long(k)
                .value_name("VALUE")
                .allow_negative_numbers(true)
                .help(help(k))
        })
        .collect()
}

fn config_arg() -> Arg {
    Arg::new("config")
        .long("config")
        .value_name("FILE")
        .help("key = value settings file; explicit flags take precedence")
}

fn cli() -> ClapCommand {
    ClapCommand::new("deffuant")
        .version(cli_io::VERSION)
        .about("Deffuant opinion dynamics with opinion-dependent mutation on random networks")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            ClapCommand::new("run")
                .about("simulate one configuration and write its steady-state distribution")
                .args(value_args(RUN_KEYS))
                .arg(
                    Arg::new("save-final")
                        .long("save-final")
                        .action(ArgAction::SetTrue)
                        .help("also write the final opinion of every agent"),
                )
                .arg(config_arg()),
        )
        .subcommand(
            ClapCommand::new("sweep")
                .about("sweep d over replicate networks and write a bifurcation map")
                .args(value_args(SWEEP_KEYS))
                .arg(config_arg()),
        )
        .subcommand(
            ClapCommand::new("gen-net")
                .about("generate an Erdos-Renyi network as an edge list")
                .args(value_args(GEN_NET_KEYS))
                .arg(config_arg()),
        )
        .subcommand(
            ClapCommand::new("peaks")
                .about("detect peaks in a distribution CSV")
                .arg(Arg::new("input").required(true).value_name("CSV"))
                .args(value_args(&["min-peak-frac", "min-peak-sep"]))
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("FILE")
                        .help("also write the peak table to this file"),
                )
                .arg(config_arg()),
        )
}

fn explicit(m: &ArgMatches, keys: &[&str]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = keys
        .iter()
        .filter_map(|&k| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    if m.try_get_one::<bool>("save-final").ok().flatten() == Some(&true) {
        out.push(("save-final".into(), "true".into()));
    }
    out
}

fn dispatch(matches: &ArgMatches) -> Result<String, CliError> {
    let (name, m) = matches.subcommand().expect("subcommand required");
    let config = m.get_one::<String>("config").map(PathBuf::from);
    let config = config.as_deref();
    match name {
        "run" => {
            let s = Settings::resolve(Command::Run, explicit(m, RUN_KEYS), config)?;
            Ok(cli_io::cmd_run(&s)?.summary)
        }
        "sweep" => {
            let s = Settings::resolve(Command::Sweep, explicit(m, SWEEP_KEYS), config)?;
            Ok(cli_io::cmd_sweep(&s)?.summary)
        }
        "gen-net" => {
            let s = Settings::resolve(Command::GenNet, explicit(m, GEN_NET_KEYS), config)?;
            Ok(cli_io::cmd_gen_net(&s)?.summary)
        }
        "peaks" => {
            let s = Settings::resolve(
                Command::Peaks,
                explicit(m, &["min-peak-frac", "min-peak-sep"]),
                config,
            )?;
            let input = PathBuf::from(m.get_one::<String>("input").expect("required"));
            let out = m.get_one::<String>("out").map(PathBuf::from);
            let (_, table) = cli_io::cmd_peaks(&input, &s.peak_params(), out.as_deref())?;
            Ok(table.trim_end().to_string())
        }
        other => unreachable!("unknown subcommand {other}"),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    match dispatch(&matches) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
