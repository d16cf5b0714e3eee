//! Single runs and grid-convergence studies.

use std::path::{Path, PathBuf};

use baro_core::{
    l2_error, run, EocTable, Error as CoreError, Field, MemorySink, RunOutcome, Stepper, Variable,
};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{write_eoc_csv, write_field_csv, write_run_meta, CsvSink};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;

/// File holding the last valid state after a blow-up.
pub const BLOW_UP_STATE_FILE: &str = "blowup_state.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("study run on N = {n} failed: {source}")]
    Study { n: usize, source: Box<CliError> },
}

impl CliError {
    fn io(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let context = context.into();
        move |source| CliError::Io { context, source }
    }

    pub fn is_blow_up(&self) -> bool {
        match self {
            CliError::Core(e) => e.is_blow_up(),
            CliError::Study { source, .. } => source.is_blow_up(),
            _ => false,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.is_blow_up() {
            EXIT_BLOW_UP
        } else {
            EXIT_FAILURE
        }
    }
}

/// Initial field and stepper for a configuration.
pub fn prepare(config: &RunConfig) -> Result<(Field, Stepper), CliError> {
    let spec = config.problem_spec()?;
    let grid = spec.grid(&config.cells())?;
    let initial = spec.initial_field(&grid)?;
    let stepper = Stepper::for_run(
        spec.params()?,
        config.discretisation()?,
        config.scheme,
        &config.controls()?,
        &initial,
    )?;
    Ok((initial, stepper))
}

/// Run to completion in memory, without touching the file system.
pub fn simulate(config: &RunConfig, sink: &mut MemorySink) -> Result<RunOutcome, CliError> {
    let (initial, stepper) = prepare(config)?;
    let controls = config.controls()?;
    Ok(run(
        initial,
        &stepper,
        &controls,
        &config.snapshot_times,
        sink,
    )?)
}

/// Run one configuration, writing `run_meta.csv`, `diagnostics.csv` and the
/// snapshots into `config.out_dir`. On blow-up the partial outputs are kept
/// and the last valid state goes to [`BLOW_UP_STATE_FILE`].
pub fn run_single(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    write_run_meta(&dir.join("run_meta.csv"), config)
        .map_err(CliError::io("writing run_meta.csv"))?;
    let (initial, stepper) = prepare(config)?;
    let controls = config.controls()?;
    let mut sink = CsvSink::create(dir).map_err(CliError::io("creating diagnostics.csv"))?;
    let result = run(
        initial,
        &stepper,
        &controls,
        &config.snapshot_times,
        &mut sink,
    );
    sink.flush()
        .map_err(CliError::io("writing diagnostics.csv"))?;
    match result {
        Ok(outcome) => Ok(outcome),
        Err(CoreError::BlowUp {
            step,
            t,
            reason,
            last_state,
        }) => {
            write_field_csv(&dir.join(BLOW_UP_STATE_FILE), &last_state)
                .map_err(CliError::io(format!("writing {BLOW_UP_STATE_FILE}")))?;
            Err(CoreError::BlowUp {
                step,
                t,
                reason,
                last_state,
            }
            .into())
        }
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocConfig {
    pub base: RunConfig,
    pub grids: Vec<usize>,
    pub reference: usize,
}

impl EocConfig {
    pub fn new(
        base: RunConfig,
        mut grids: Vec<usize>,
        reference: usize,
    ) -> Result<Self, ConfigError> {
        if grids.is_empty() {
            return Err(ConfigError::Inconsistent("no study grids given".into()));
        }
        grids.sort_unstable();
        grids.dedup();
        if let Some(&bad) = grids
            .iter()
            .find(|&&n| n == 0 || !reference.is_multiple_of(n))
        {
            return Err(ConfigError::Inconsistent(format!(
                "reference N = {reference} must be a multiple of every study N (got {bad})"
            )));
        }
        Ok(Self {
            base,
            grids,
            reference,
        })
    }

    fn run_dir(&self, n: usize) -> PathBuf {
        self.base.out_dir.join(format!("n{n}"))
    }

    fn reference_dir(&self) -> PathBuf {
        self.base
            .out_dir
            .join(format!("reference_n{}", self.reference))
    }
}

/// Run the reference and every study grid concurrently, each into its own
/// directory, and compute the error table against the block-averaged
/// reference.
pub fn eoc_study(config: &EocConfig, write_runs: bool) -> Result<EocTable, CliError> {
    let runner = |cfg: RunConfig| -> Result<Field, CliError> {
        if write_runs {
            run_single(&cfg).map(|o| o.field)
        } else {
            simulate(&cfg, &mut MemorySink::default()).map(|o| o.field)
        }
    };
    let no_snapshots = |mut c: RunConfig| {
        c.snapshot_times.clear();
        c
    };
    let (reference, coarse) = std::thread::scope(|s| {
        let reference = s.spawn(|| {
            runner(no_snapshots(
                config
                    .base
                    .with_grid(config.reference, config.reference_dir()),
            ))
        });
        let coarse: Vec<_> = config
            .grids
            .iter()
            .map(|&n| {
                let cfg = no_snapshots(config.base.with_grid(n, config.run_dir(n)));
                s.spawn(move || (n, runner(cfg)))
            })
            .collect();
        let reference = reference.join().expect("reference run panicked");
        let coarse: Vec<_> = coarse
            .into_iter()
            .map(|h| h.join().expect("study run panicked"))
            .collect();
        (reference, coarse)
    });
    let reference = reference.map_err(|e| CliError::Study {
        n: config.reference,
        source: Box::new(e),
    })?;

    let variables = Variable::all(reference.grid().dim());
    let mut grids = Vec::new();
    let mut errors = Vec::new();
    for (n, field) in coarse {
        let field = field.map_err(|e| CliError::Study {
            n,
            source: Box::new(e),
        })?;
        grids.push((n, field.grid().dx(0)));
        errors.push(l2_error(&field, &reference, &variables)?);
    }
    Ok(EocTable::new(variables, &grids, &errors)?)
}

/// [`eoc_study`] with per-run outputs, plus `eoc.csv` in the base directory.
pub fn run_eoc(config: &EocConfig) -> Result<EocTable, CliError> {
    let dir: &Path = &config.base.out_dir;
    std::fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let table = eoc_study(config, true)?;
    write_eoc_csv(&dir.join("eoc.csv"), &table).map_err(CliError::io("writing eoc.csv"))?;
    Ok(table)
}
