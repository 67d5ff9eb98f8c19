//! Parses a config, runs a subcommand in-process and prints its manifest.

use clap::Parser;
use ilp_gadgets::cli::{execute, resolve, Cli, RunConfig, RunManifest};

fn main() {
    println!("default config hash {}", RunConfig::default_hash());
    let cli = Cli::parse_from(["ilp-gadgets", "--seed", "5", "miss-prob"]);
    let cmd = cli.command.clone().unwrap();
    let rc = resolve(&cli, &cmd).unwrap();
    let out = execute(&cmd, &rc).unwrap();
    println!("{}", out.summary);
    let manifest = RunManifest {
        subcommand: cmd.name().into(),
        config: rc.clone(),
        csv_path: "out/miss-prob.csv".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    let text = manifest.render();
    print!("{}", text.lines().take(8).map(|l| format!("{l}\n")).collect::<String>());
    println!("...");
    assert_eq!(RunConfig::from_kv_str(&text).unwrap(), rc);
    println!("manifest parses back to the same config");
}
