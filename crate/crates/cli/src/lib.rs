//! Command line front end and HTTP service for `regiongem`.

pub mod args;
pub mod commands;
pub mod config;
pub mod service;

use std::io::Write;

use args::{Cli, Command, ServeArgs};
use config::{pick, FileConfig};
use service::{ServiceConfig, DEFAULT_BIND, DEFAULT_K, DEFAULT_MAX_UPLOAD_BYTES};

pub fn service_config(args: &ServeArgs, file: &FileConfig) -> ServiceConfig {
    let origins = if args.allow_origins.is_empty() {
        file.allow_origins.clone().unwrap_or_default()
    } else {
        args.allow_origins.clone()
    };
    ServiceConfig {
        index_path: args.index.clone(),
        bind: pick(args.bind.clone(), file.bind.clone(), DEFAULT_BIND.to_string()),
        max_upload_bytes: pick(args.max_upload_bytes, file.max_upload_bytes, DEFAULT_MAX_UPLOAD_BYTES),
        default_k: pick(args.default_k, file.default_k, DEFAULT_K),
        allow_origins: origins,
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    commands::configure_jobs(cli.jobs, &file)?;
    log::debug!("running {:?}", cli.command);
    match &cli.command {
        Command::Index(a) => commands::cmd_index(a, &file, out),
        Command::Query(a) => commands::cmd_query(a, out),
        Command::Evaluate(a) => commands::cmd_evaluate(a, &file, out),
        Command::Masks(a) => commands::cmd_masks(a, out),
        Command::Serve(a) => {
            let config = service_config(a, &file);
            tokio::runtime::Runtime::new()?.block_on(service::serve(config))
        }
    }
}
