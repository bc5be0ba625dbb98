//! Experiment runner behind the command-line front end.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::chaining::ProfileSet;
use crate::config::{ExperimentConfig, Seeds};
use crate::error::{Error, Result};
use crate::exec::ExecMode;
use crate::model::Receiver;
use crate::region::{search_auxiliaries, write_region_csv};
use crate::scheme::{build_code, simulate, superposition_owner, BroadcastPolarCode, CodeLayer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Polarize,
    Region,
    Simulate,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed_override: Option<u64>,
    pub exec: ExecMode,
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Csv(_) => 1,
            Error::Infeasible { .. } | Error::CommonCapacity { .. } => 3,
            Error::Budget { .. } => 4,
            _ => 2,
        }
    }
}

/// Header comment carried by every CSV file.
fn provenance(cfg: &ExperimentConfig) -> String {
    format!("# config_sha256={} version={}\n", cfg.hash(), env!("CARGO_PKG_VERSION"))
}

struct Emitter {
    dir: PathBuf,
    comment: String,
    written: Vec<PathBuf>,
}

impl Emitter {
    fn csv(&mut self, name: &str, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut f = BufWriter::new(File::create(&path)?);
        f.write_all(self.comment.as_bytes())?;
        body(&mut f)?;
        f.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{text}\n"))?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        self.csv(name, |f| {
            let mut w = csv::Writer::from_writer(f);
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }
}

fn file_stem(label: &str) -> String {
    label.replace('|', "_given_").replace(',', "_").to_lowercase()
}

/// Runs one command and returns the files written.
pub fn run(opts: &RunOptions) -> Result<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::load(&opts.config)?;
    if let Some(seed) = opts.seed_override {
        cfg.seeds = Seeds::from_single(seed);
    }
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    let mut em = Emitter {
        dir,
        comment: provenance(&cfg),
        written: Vec::new(),
    };
    let spec = cfg.channel.build()?;
    let aux = cfg.aux.build()?;
    let mut code_cfg = cfg.code_config();
    code_cfg.profile.exec = opts.exec;
    match opts.command {
        Command::Polarize => {
            let sup = superposition_owner(&spec, &aux, cfg.corner);
            let set = ProfileSet::compute(&spec, &aux, sup, cfg.n, &code_cfg.profile)?;
            for p in set.all() {
                em.csv(&format!("profile_{}.csv", file_stem(&p.label)), |f| p.write_csv(f))?;
            }
        }
        Command::Region => {
            em.csv("region.csv", |f| write_region_csv(f, &aux, &spec, cfg.formula))?;
            if cfg.region.search {
                let r = search_auxiliaries(&spec, cfg.region.weights, cfg.region.resolution, opts.exec)?;
                if r.resolution < r.requested_resolution {
                    eprintln!(
                        "warning: grid resolution capped from {} to {} ({} cells)",
                        r.requested_resolution, r.resolution, r.cells
                    );
                }
                let (pv, pv2, pv1) = r.aux.conditionals();
                let phi: String = r.aux.phi_table().iter().map(|b| b.to_string()).collect();
                em.table(
                    "search.csv",
                    &[
                        "resolution", "cells", "objective", "r1", "r2", "p_v", "p_v2_given_v0", "p_v2_given_v1",
                        "p_v1_given_00", "p_v1_given_01", "p_v1_given_10", "p_v1_given_11", "phi",
                    ],
                    &[vec![
                        r.resolution.to_string(),
                        r.cells.to_string(),
                        r.objective.to_string(),
                        r.point.r1.to_string(),
                        r.point.r2.to_string(),
                        pv.to_string(),
                        pv2[0].to_string(),
                        pv2[1].to_string(),
                        pv1[0][0].to_string(),
                        pv1[0][1].to_string(),
                        pv1[1][0].to_string(),
                        pv1[1][1].to_string(),
                        phi,
                    ]],
                )?;
            }
        }
        Command::Analyze => {
            let code = prepared_code(&cfg, &spec, &aux, &code_cfg)?;
            em.json("code.json", &serde_json::to_string_pretty(&code)?)?;
            em.json("schedule.json", &code.schedule.to_json()?)?;
            let rates = code.rates();
            let bound = code.analyze_error_bound();
            let mut rows = vec![
                ("superposition_owner", (code.sup.number() as f64).to_string()),
                ("r0", rates.r0.to_string()),
                ("r1", rates.r1.to_string()),
                ("r2", rates.r2.to_string()),
                ("r0_frame", rates.r0_frame.to_string()),
                ("r1_frame", rates.r1_frame.to_string()),
                ("r2_frame", rates.r2_frame.to_string()),
            ];
            for r in [Receiver::One, Receiver::Two] {
                let b = bound.per_receiver[r.index()];
                rows.push((if r == Receiver::One { "bound1_superposition" } else { "bound2_superposition" }, b[0].to_string()));
                rows.push((if r == Receiver::One { "bound1_private" } else { "bound2_private" }, b[1].to_string()));
            }
            let rows: Vec<Vec<String>> = rows.into_iter().map(|(k, v)| vec![k.to_string(), v]).collect();
            em.table("analysis.csv", &["quantity", "value"], &rows)?;
            census_table(&mut em, &code)?;
        }
        Command::Simulate => {
            let code = prepared_code(&cfg, &spec, &aux, &code_cfg)?;
            let summary = simulate(&code, cfg.trials, cfg.simulation_seeds(), opts.exec)?;
            em.csv("trials.csv", |f| summary.write_csv(f))?;
            let rates = code.rates();
            let rows: Vec<Vec<String>> = [
                ("trials", summary.trials as f64),
                ("blocks_per_frame", summary.blocks_per_frame as f64),
                ("r0", rates.r0),
                ("r1", rates.r1),
                ("r2", rates.r2),
                ("frame_error_m1", summary.error_rate[0]),
                ("frame_error_m2", summary.error_rate[1]),
                ("frame_error_m0", summary.error_rate[2]),
                ("block_error_m1", summary.block_error_rate[0]),
                ("block_error_m2", summary.block_error_rate[1]),
            ]
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.to_string()])
            .collect();
            em.table("summary.csv", &["quantity", "value"], &rows)?;
        }
    }
    Ok(em.written)
}

fn prepared_code(
    cfg: &ExperimentConfig,
    spec: &crate::model::BroadcastChannelSpec,
    aux: &crate::model::AuxiliaryStructure,
    code_cfg: &crate::scheme::CodeConfig,
) -> Result<BroadcastPolarCode> {
    let mut code = build_code(spec, aux, code_cfg)?;
    if cfg.common_rate > 0.0 {
        code = code.allocate_common(cfg.common_rate)?;
    }
    if cfg.backoff < 1.0 {
        code = code.backoff(cfg.backoff)?;
    }
    Ok(code)
}

fn census_table(em: &mut Emitter, code: &BroadcastPolarCode) -> Result<()> {
    let rows: Vec<Vec<String>> = CodeLayer::ALL
        .iter()
        .map(|&l| {
            let c = code.census(l);
            let name = match l {
                CodeLayer::Superposition => "superposition",
                CodeLayer::Sup => "sup_private",
                CodeLayer::Oth => "oth_private",
            };
            [name.to_string()]
                .into_iter()
                .chain([c.info, c.chained, c.shared, c.frozen, c.overhead].map(|v| v.to_string()))
                .collect()
        })
        .collect();
    em.table("census.csv", &["layer", "info", "chained", "shared", "frozen", "overhead"], &rows)
}

/// Reads back a CSV written by [`run`], skipping the comment row.
pub fn read_table(path: &Path) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    Ok(r.records().collect::<std::result::Result<Vec<_>, _>>()?)
}
