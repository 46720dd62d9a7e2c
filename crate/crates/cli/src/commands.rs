use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use recon_core::datagen::{build_dataset, Dataset, Split};
use recon_core::extraction::{displace_mesh, reconstruct_smooth};
use recon_core::meshcore::obj::{read_obj, write_obj};
use recon_core::metrics::MetricsReport;
use recon_core::neural::{train_coarse, train_disp, CoarseModel, DispModel, EpochLoss, ModelDims};
use recon_core::pipeline::{coarse_examples, disp_examples, observation, DispSource};
use recon_core::Error;

use crate::config::{ConfigError, RunConfig};
use crate::Command;

#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Io(String),
    Core(Error),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "{e}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl Failure {
    /// 2 config, 3 I/O, 4 numeric failure, 5 checkpoint incompatibility.
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Io(_) => 3,
            Failure::Core(e) => match e.root() {
                Error::InvalidArgument(_) | Error::DimensionMismatch(_) => 2,
                Error::Io(_) | Error::Format(_) | Error::ObjParse { .. } | Error::InvalidMesh(_) => 3,
                Error::NonFinite(_) | Error::NoIsosurface(_) | Error::ZeroNormal(_) => 4,
                Error::Checkpoint(_) | Error::CheckpointVersion { .. } => 5,
                _ => 1,
            },
        }
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: &Command, cfg: &RunConfig) -> Outcome {
    match command {
        Command::GenData { out } => gen_data(cfg, out.as_deref().unwrap_or(&cfg.data_dir)),
        Command::TrainCoarse { data, out, log } => train_coarse_cmd(cfg, data_dir(cfg, data), out, log.as_deref()),
        Command::TrainDisp { data, out, coarse, log } => {
            train_disp_cmd(cfg, data_dir(cfg, data), out, coarse.as_deref(), log.as_deref())
        }
        Command::Reconstruct { coarse, disp, data, item, out } => {
            reconstruct_cmd(cfg, data_dir(cfg, data), coarse, disp.as_deref(), *item, out)
        }
        Command::Evaluate { pred, gt, out } => evaluate_cmd(cfg, pred, gt, out.as_deref()),
    }
}

fn data_dir<'a>(cfg: &'a RunConfig, data: &'a Option<PathBuf>) -> &'a Path {
    data.as_deref().unwrap_or(&cfg.data_dir)
}

fn gen_data(cfg: &RunConfig, out: &Path) -> Outcome {
    let ds = build_dataset(&cfg.dataset, out)?;
    println!("wrote {} items to {}", ds.items.len(), out.display());
    Ok(())
}

fn dims_for(cfg: &RunConfig, ds: &Dataset) -> ModelDims {
    ModelDims { height: ds.image_size, width: ds.image_size, ..cfg.dims }
}

/// CSV loss log, one row per epoch, flushed as training goes.
struct LossLog(Option<BufWriter<File>>);

impl LossLog {
    fn create(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else { return Ok(Self(None)) };
        let mut w = BufWriter::new(File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?);
        writeln!(w, "epoch,mean_loss,wall_seconds")?;
        Ok(Self(Some(w)))
    }

    fn record(&mut self, e: &EpochLoss) {
        eprintln!("epoch {} loss {:.6} ({:.1} s)", e.epoch, e.mean_loss, e.wall_seconds);
        if let Some(w) = &mut self.0 {
            // A failed log write must not abort training; it resurfaces in finish().
            let _ = writeln!(w, "{},{},{}", e.epoch, e.mean_loss, e.wall_seconds).and_then(|_| w.flush());
        }
    }

    fn finish(self) -> Outcome {
        if let Some(mut w) = self.0 {
            w.flush()?;
        }
        Ok(())
    }
}

fn write_checkpoint(path: &Path, save: impl FnOnce(&mut BufWriter<File>) -> recon_core::Result<()>) -> Outcome {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?);
    save(&mut w)?;
    w.flush()?;
    Ok(())
}

fn open_checkpoint(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn train_coarse_cmd(cfg: &RunConfig, data: &Path, out: &Path, log: Option<&Path>) -> Outcome {
    let ds = Dataset::open(data)?;
    let examples = coarse_examples(&ds, Split::Train)?;
    let mut model = CoarseModel::new(dims_for(cfg, &ds), cfg.seed)?;
    let mut log = LossLog::create(log)?;
    train_coarse(&mut model, &examples, &cfg.coarse_train, |e| log.record(e))?;
    log.finish()?;
    write_checkpoint(out, |w| model.save(w))
}

fn train_disp_cmd(cfg: &RunConfig, data: &Path, out: &Path, coarse: Option<&Path>, log: Option<&Path>) -> Outcome {
    let ds = Dataset::open(data)?;
    let coarse = coarse.map(|p| CoarseModel::load(open_checkpoint(p)?).map_err(Failure::from)).transpose()?;
    let source = match &coarse {
        Some(model) => DispSource::Reconstruction(model, &cfg.extraction),
        None => DispSource::PseudoGroundTruth,
    };
    let examples = disp_examples(&ds, Split::Train, source)?;
    let mut model = DispModel::new(dims_for(cfg, &ds), cfg.seed)?;
    let mut log = LossLog::create(log)?;
    train_disp(&mut model, &examples, &cfg.disp_train, |e| log.record(e))?;
    log.finish()?;
    write_checkpoint(out, |w| model.save(w))
}

fn reconstruct_cmd(cfg: &RunConfig, data: &Path, coarse: &Path, disp: Option<&Path>, item: usize, out: &Path) -> Outcome {
    let coarse = CoarseModel::load(open_checkpoint(coarse)?)?;
    let disp = disp.map(|p| DispModel::load(open_checkpoint(p)?).map_err(Failure::from)).transpose()?;
    let ds = Dataset::open(data)?;
    if item >= ds.items.len() {
        return Err(Error::InvalidArgument(format!("item {item} out of range, dataset has {} items", ds.items.len())).into());
    }
    let obs = observation(&ds.load(item)?)?;
    let smooth = reconstruct_smooth(&coarse, &obs, &cfg.extraction)?;
    std::fs::create_dir_all(out)?;
    write_obj(out.join("smooth.obj"), &smooth)?;
    if let Some(disp) = disp {
        write_obj(out.join("detailed.obj"), &displace_mesh(&disp, &obs, &smooth)?)?;
    }
    Ok(())
}

fn evaluate_cmd(cfg: &RunConfig, pred: &Path, gt: &Path, out: Option<&Path>) -> Outcome {
    let report = MetricsReport::evaluate(&read_obj(pred)?, &read_obj(gt)?, cfg.eval_samples, cfg.seed)?;
    print!("{}", report.to_key_value());
    if let Some(out) = out {
        std::fs::write(out, report.to_json() + "\n")?;
    }
    Ok(())
}
