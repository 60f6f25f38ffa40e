//! Experiment orchestration: one configured batch of replicates, each fully
//! determined by `(config, seed, replicate)` through keyed RNG streams.
//!
//! Per replicate the pipeline generates a graph, draws parameters, samples a
//! dataset, scores every requested method, and evaluates edge recovery. All
//! artifacts are persisted under `output_dir/rep_<i>/`. Method failures are
//! isolated: one diverged optimizer is reported without aborting the other
//! methods or replicates.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use mrf_bench_core::eval::{pr_curve, rank_edges};
use mrf_bench_core::model::{
    draw_parameters, generate_grid, generate_scale_free, generate_small_world, grid_dims, Graph,
    IsingModel,
};
use mrf_bench_core::pairwise::{aracne, clr, mutual_information_matrix, network_deconvolution, ScoreMatrix};
use mrf_bench_core::plm::{plmdca_lambdas, plmdca_scores_with, plml1_scores_with};
use mrf_bench_core::sampler::{build_srbm, gibbs_sample, Dataset};
use mrf_bench_core::stream::{mix, stream_rng};

use crate::config::{ExperimentConfig, Method, NetworkType};

const KEY_GRAPH: u64 = 0x10;
const KEY_PARAMS: u64 = 0x11;
const KEY_SAMPLER: u64 = 0x12;

/// One evaluated (method, replicate) cell.
///
/// `runtime_seconds` times the method's own step: the MI computation for
/// `mi`, the post-processing step for `clr`/`aracne`/`nd`, and the full fit
/// for the pseudo-likelihood methods. `runtime_mi_seconds` carries the shared
/// MI runtime for the post-processors (0 elsewhere), so a total is always the
/// sum of the two columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub network: NetworkType,
    pub d: usize,
    pub n: usize,
    pub replicate: usize,
    pub auc: f64,
    pub rc090: f64,
    pub runtime_seconds: f64,
    pub runtime_mi_seconds: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ResultsTable {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<String>,
}

impl ResultsTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,network,d,n,replicate,auc,rc090,runtime_seconds,runtime_mi_seconds\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.method.name(),
                r.network.name(),
                r.d,
                r.n,
                r.replicate,
                r.auc,
                r.rc090,
                r.runtime_seconds,
                r.runtime_mi_seconds
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().context("empty results file")?;
        let expect = "method,network,d,n,replicate,auc,rc090,runtime_seconds,runtime_mi_seconds";
        if header.trim() != expect {
            bail!("unexpected results header `{header}`");
        }
        let mut rows = Vec::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                bail!("bad results row `{line}`");
            }
            rows.push(ResultRow {
                method: Method::parse(f[0])?,
                network: NetworkType::parse(f[1])?,
                d: f[2].parse()?,
                n: f[3].parse()?,
                replicate: f[4].parse()?,
                auc: f[5].parse()?,
                rc090: f[6].parse()?,
                runtime_seconds: f[7].parse()?,
                runtime_mi_seconds: f[8].parse()?,
            });
        }
        Ok(ResultsTable { rows, failures: Vec::new() })
    }
}

/// Generate the ground-truth graph of one replicate.
pub fn generate_network(cfg: &ExperimentConfig, replicate: usize) -> Result<Graph> {
    let mut rng = stream_rng(cfg.seed, &[KEY_GRAPH, replicate as u64]);
    let graph = match cfg.network {
        NetworkType::Grid => {
            let (rows, cols) = grid_dims(cfg.d);
            generate_grid(rows, cols)?
        }
        NetworkType::ScaleFree => {
            generate_scale_free(cfg.d, cfg.settings.sf_m0, cfg.settings.sf_m, &mut rng)?
        }
        NetworkType::SmallWorld => {
            generate_small_world(cfg.d, cfg.settings.sw_k, cfg.settings.sw_p, &mut rng)?
        }
    };
    Ok(graph)
}

/// Draw the replicate's model parameters.
pub fn draw_model(cfg: &ExperimentConfig, replicate: usize, graph: &Graph) -> IsingModel {
    draw_parameters(graph, &mut stream_rng(cfg.seed, &[KEY_PARAMS, replicate as u64]))
}

/// Stream seed of a replicate's sampling stage.
pub fn sampler_seed(seed: u64, replicate: usize) -> u64 {
    mix(seed, &[KEY_SAMPLER, replicate as u64])
}

/// Sample the replicate's dataset.
pub fn sample_dataset(cfg: &ExperimentConfig, replicate: usize, model: &IsingModel) -> Result<Dataset> {
    let mapping = build_srbm(model);
    Ok(gibbs_sample(
        &mapping,
        cfg.n,
        cfg.sampler.burn_in,
        cfg.sampler.thinning,
        sampler_seed(cfg.seed, replicate),
        cfg.sampler.parallel_phases,
    )?)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Score one method on a dataset. Returns the score matrix, the method's own
/// runtime, and the attributed MI runtime (see [`ResultRow`]).
pub fn score_method(
    settings: &crate::config::MethodSettings,
    method: Method,
    data: &Dataset,
    mi: Option<&(ScoreMatrix, f64)>,
) -> Result<(ScoreMatrix, f64, f64)> {
    match method {
        Method::Mi => {
            let (matrix, secs) = mi.cloned().context("mi matrix missing")?;
            Ok((matrix, secs, 0.0))
        }
        Method::Clr => {
            let (base, mi_secs) = mi.context("mi matrix missing")?;
            let (out, secs) = timed(|| clr(base));
            Ok((out, secs, *mi_secs))
        }
        Method::Aracne => {
            let (base, mi_secs) = mi.context("mi matrix missing")?;
            let (out, secs) = timed(|| aracne(base, settings.aracne_tolerance));
            Ok((out, secs, *mi_secs))
        }
        Method::Nd => {
            let (base, mi_secs) = mi.context("mi matrix missing")?;
            let (out, secs) = timed(|| network_deconvolution(base, settings.nd_beta));
            Ok((out?, secs, *mi_secs))
        }
        Method::Plml1 => {
            let (out, secs) =
                timed(|| plml1_scores_with(data, settings.grid_size, settings.l1_rule.into()));
            Ok((out?, secs, 0.0))
        }
        Method::Plmdca => {
            let (rule_bias, rule_couple) = plmdca_lambdas(data.n());
            let lb = settings.plm_lambda_bias.unwrap_or(rule_bias);
            let lc = settings.plm_lambda_couple.unwrap_or(rule_couple);
            let (out, secs) = timed(|| plmdca_scores_with(data, lb, lc));
            Ok((out?, secs, 0.0))
        }
    }
}

fn replicate_dir(cfg: &ExperimentConfig, replicate: usize) -> PathBuf {
    cfg.output_dir.join(format!("rep_{replicate}"))
}

/// Run one replicate end to end, persisting artifacts under
/// `output_dir/rep_<i>/`. Results are identical whether the replicate runs
/// alone or inside a batch.
pub fn run_replicate(cfg: &ExperimentConfig, replicate: usize) -> Result<ResultsTable> {
    let dir = replicate_dir(cfg, replicate);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let graph = generate_network(cfg, replicate)?;
    let model = draw_model(cfg, replicate, &graph);
    let data = sample_dataset(cfg, replicate, &model)?;
    fs::write(dir.join("graph.txt"), graph.to_text())?;
    fs::write(dir.join("model.json"), model.to_json())?;
    fs::write(dir.join("data.csv"), data.to_csv())?;

    let mut table = ResultsTable::default();
    let mi = if cfg.methods.iter().any(Method::uses_mi) {
        let start = Instant::now();
        match mutual_information_matrix(&data) {
            Ok(matrix) => Some((matrix, start.elapsed().as_secs_f64())),
            Err(e) => {
                table
                    .failures
                    .push(format!("replicate {replicate}: mutual information failed: {e}"));
                None
            }
        }
    } else {
        None
    };

    for &method in &cfg.methods {
        if method.uses_mi() && mi.is_none() {
            continue; // failure already recorded
        }
        let scored = score_method(&cfg.settings, method, &data, mi.as_ref());
        let (scores, secs, mi_secs) = match scored {
            Ok(out) => out,
            Err(e) => {
                table
                    .failures
                    .push(format!("replicate {replicate}, method {}: {e}", method.name()));
                continue;
            }
        };
        fs::write(dir.join(format!("scores_{}.csv", method.name())), scores.to_csv())?;
        let ranking = rank_edges(&scores);
        fs::write(dir.join(format!("edges_{}.txt", method.name())), ranking.to_text())?;
        let curve = match pr_curve(&ranking, &graph) {
            Ok(curve) => curve,
            Err(e) => {
                table
                    .failures
                    .push(format!("replicate {replicate}, method {}: {e}", method.name()));
                continue;
            }
        };
        fs::write(dir.join(format!("pr_{}.csv", method.name())), curve.to_csv())?;
        table.rows.push(ResultRow {
            method,
            network: cfg.network,
            d: cfg.d,
            n: cfg.n,
            replicate,
            auc: curve.auc(),
            rc090: curve.rc090(),
            runtime_seconds: secs,
            runtime_mi_seconds: mi_secs,
        });
    }
    Ok(table)
}

/// Run every replicate of a configuration and write `results.csv` (plus a
/// copy of the resolved config) under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsTable> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)
        .with_context(|| format!("cannot create {}", cfg.output_dir.display()))?;
    fs::write(cfg.output_dir.join("config.json"), cfg.to_json())?;

    let replicate_tables: Vec<Result<ResultsTable>> = if cfg.parallel_replicates {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate(cfg, r))
            .collect()
    } else {
        (0..cfg.replicates).map(|r| run_replicate(cfg, r)).collect()
    };

    let mut table = ResultsTable::default();
    for (replicate, result) in replicate_tables.into_iter().enumerate() {
        match result {
            Ok(mut t) => {
                table.rows.append(&mut t.rows);
                table.failures.append(&mut t.failures);
            }
            Err(e) => table.failures.push(format!("replicate {replicate}: {e}")),
        }
    }
    fs::write(cfg.output_dir.join("results.csv"), table.to_csv())?;
    if !table.rows.is_empty() {
        let summary = crate::aggregate::aggregate(&table)?;
        fs::write(cfg.output_dir.join("summary.csv"), crate::aggregate::to_csv(&summary))?;
    }
    Ok(table)
}
