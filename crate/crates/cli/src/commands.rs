//! The three subcommands and their output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use qbc_core::image_io::encode_pgm;
use qbc_core::quantum::{SimError, MAX_QUBITS};
use qbc_core::{
    build_efrqi_circuit, build_scmneqr_circuit, decode_block, expected_state, fidelity, idealized_readout,
    load_image, simulate, GrayImage, ImageCodec, PipelineConfig, QfRun, QuantumBlock, QuantumState,
    RegisterLayout, Scheme, SimulationMode, SynthSpec,
};

use crate::{CliError, RunConfig};

pub const REPORT_HEADER: &str = "qf,scheme,n_tcn,q_ones,s_state,s_bit,a_bit,b_e,br_bits,psnr_db,clamped_count";
pub const RDC_HEADER: &str = "scheme,qf,br_bits,psnr_db";
pub const VERIFY_HEADER: &str = "block_x,block_y,n_tcn,efrqi_fidelity,scmneqr_channel_fidelity,\
scmneqr_idealized_decode_exact,unrecoverable_positions";

/// Files written by a command and the one-line summary for the terminal.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Reads an image file, or renders an inline `synth:` spec.
pub fn load_input(input: &str) -> Result<GrayImage, CliError> {
    if input.starts_with("synth:") {
        Ok(input.parse::<SynthSpec>()?.render()?)
    } else {
        Ok(load_image(input)?)
    }
}

/// PSNR as written to tables: six decimals, `inf` for an exact reconstruction.
pub fn psnr_cell(psnr_db: f64) -> String {
    if psnr_db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{psnr_db:.6}")
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

fn sweep(cfg: &RunConfig, qfs: &[u32]) -> Result<(GrayImage, Vec<QfRun>), CliError> {
    let img = load_input(&cfg.input)?;
    let codec = ImageCodec::new(PipelineConfig {
        layout: cfg.layout()?,
        b_e_mode: cfg.b_e_mode,
    });
    let prepared = codec.prepare(&img);
    let schemes = cfg.unique_schemes();
    let mut runs = Vec::with_capacity(qfs.len());
    for &qf in qfs {
        let run = codec.run(&prepared, qf, &schemes)?;
        if let Some(r) = run.reports.iter().find(|r| !r.identity_holds()) {
            return Err(CliError::Pipeline(format!(
                "bit-rate terms do not add up for {} at qf={qf}",
                r.scheme()
            )));
        }
        runs.push(run);
    }
    Ok((img, runs))
}

fn write_common(w: &mut Writer, cfg: &RunConfig, runs: &[QfRun]) -> Result<(), CliError> {
    for run in runs {
        w.write(&format!("recon_qf{}.pgm", run.qf), &encode_pgm(&run.reconstruction))?;
    }
    w.write("run.json", cfg.to_json().as_bytes())
}

fn rate_summary(cfg: &RunConfig, run: &QfRun) -> String {
    let rates: Vec<String> = run
        .reports
        .iter()
        .map(|r| format!("{} {}", r.scheme(), cfg.units.format(r.br())))
        .collect();
    format!("qf={} {}, psnr {} dB", run.qf, rates.join(", "), psnr_cell(run.psnr_db))
}

/// Compresses the input at every factor and writes `report.csv`, the
/// reconstructions and `run.json`; with `verify_circuits` also `verify.csv`.
pub fn cmd_compress(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let (_, runs) = sweep(cfg, &cfg.sorted_qfs())?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let mut csv = format!("{REPORT_HEADER}\n");
    for run in &runs {
        for r in &run.reports {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{}",
                run.qf,
                r.scheme(),
                r.n_tcn(),
                r.q_ones(),
                r.s_state(),
                r.s_bit(),
                r.a_bit(),
                r.b_e(),
                r.br(),
                psnr_cell(run.psnr_db),
                r.clamped_count()
            )
            .expect("write to string");
        }
    }
    w.write("report.csv", csv.as_bytes())?;
    write_common(&mut w, cfg, &runs)?;
    let mut summary = format!(
        "compress: {} rows, {}",
        runs.len() * cfg.unique_schemes().len(),
        rate_summary(cfg, &runs[0])
    );
    if cfg.verify_circuits {
        let verified = run_verify(cfg, &mut w)?;
        write!(summary, "; {verified}").expect("write to string");
    }
    write!(summary, " -> {}", cfg.output_dir.display()).expect("write to string");
    Ok(Outcome {
        summary,
        files: w.files,
    })
}

/// Rate-distortion sweep: `rdc.csv`, `rdc.dat`, reconstructions and `run.json`.
pub fn cmd_rdc(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let (_, runs) = sweep(cfg, &cfg.sorted_qfs())?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let mut csv = format!("{RDC_HEADER}\n");
    let mut dat = String::new();
    for (k, scheme) in cfg.unique_schemes().iter().enumerate() {
        if k > 0 {
            dat.push_str("\n\n");
        }
        writeln!(dat, "# {scheme}\n# br_bits psnr_db").expect("write to string");
        for run in &runs {
            let r = &run.reports[k];
            let psnr = psnr_cell(run.psnr_db);
            writeln!(csv, "{scheme},{},{},{psnr}", run.qf, r.br()).expect("write to string");
            writeln!(dat, "{} {psnr}", r.br()).expect("write to string");
        }
    }
    w.write("rdc.csv", csv.as_bytes())?;
    w.write("rdc.dat", dat.as_bytes())?;
    write_common(&mut w, cfg, &runs)?;
    let last = runs.last().expect("qfs validated non-empty");
    let summary = format!(
        "rdc: {} points, {} .. {} -> {}",
        runs.len() * cfg.unique_schemes().len(),
        rate_summary(cfg, &runs[0]),
        rate_summary(cfg, last),
        cfg.output_dir.display()
    );
    Ok(Outcome {
        summary,
        files: w.files,
    })
}

/// Simulates the block circuits at the first listed factor and writes `verify.csv`.
pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let verified = run_verify(cfg, &mut w)?;
    w.write("run.json", cfg.to_json().as_bytes())?;
    Ok(Outcome {
        summary: format!("verify: {verified} -> {}", cfg.output_dir.display()),
        files: w.files,
    })
}

fn run_verify(cfg: &RunConfig, w: &mut Writer) -> Result<String, CliError> {
    let qf = cfg.qfs[0];
    let (_, runs) = sweep(cfg, &[qf])?;
    let layout = cfg.layout()?;
    let mut dumps = Vec::new();
    let (rows, skips) = verify_blocks(
        &runs[0].blocks,
        &layout,
        cfg.verify_block_limit,
        cfg.dump_circuits.then_some(&mut dumps),
    )?;
    let mut csv = format!("{VERIFY_HEADER}\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{:.12},{:.12},{},{}",
            r.block_x,
            r.block_y,
            r.n_tcn,
            r.efrqi_fidelity,
            r.scmneqr_channel_fidelity,
            r.idealized_decode_exact,
            r.unrecoverable_positions
        )
        .expect("write to string");
    }
    w.write("verify.csv", csv.as_bytes())?;
    if !skips.is_empty() {
        let mut text = String::from("block_x,block_y,reason\n");
        for s in &skips {
            writeln!(text, "{},{},\"{}\"", s.block_x, s.block_y, s.reason).expect("write to string");
        }
        w.write("verify_skipped.csv", text.as_bytes())?;
    }
    for (name, body) in &dumps {
        w.write(name, body.as_bytes())?;
    }
    if rows.is_empty() && !skips.is_empty() {
        return Err(CliError::Verify(format!(
            "all {} blocks skipped: {}",
            skips.len(),
            skips[0].reason
        )));
    }
    let min_efrqi = rows.iter().map(|r| r.efrqi_fidelity).fold(f64::INFINITY, f64::min);
    let max_scm = rows.iter().map(|r| r.scmneqr_channel_fidelity).fold(f64::NEG_INFINITY, f64::max);
    Ok(if rows.is_empty() {
        format!("qf={qf}, no non-empty blocks")
    } else {
        format!(
            "qf={qf}, {} blocks verified, {} skipped, min EFRQI fidelity {min_efrqi:.12}, max SCMNEQR fidelity {max_scm:.12}",
            rows.len(),
            skips.len()
        )
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyRow {
    pub block_x: usize,
    pub block_y: usize,
    pub n_tcn: usize,
    pub efrqi_fidelity: f64,
    pub scmneqr_channel_fidelity: f64,
    /// Every position of the per-branch readout equals the coefficient magnitude.
    pub idealized_decode_exact: bool,
    /// Positions missing from some reset outcome of the channel simulation.
    pub unrecoverable_positions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifySkip {
    pub block_x: usize,
    pub block_y: usize,
    pub reason: String,
}

/// Simulates both circuits for up to `limit` non-empty blocks in grid order.
/// Blocks beyond the simulator budget are skipped with a reason. When `dumps`
/// is given, `(file name, gate listing)` pairs are appended for each circuit.
pub fn verify_blocks(
    blocks: &[QuantumBlock],
    layout: &RegisterLayout,
    limit: usize,
    mut dumps: Option<&mut Vec<(String, String)>>,
) -> Result<(Vec<VerifyRow>, Vec<VerifySkip>), CliError> {
    let mut rows = Vec::new();
    let mut skips = Vec::new();
    for block in blocks.iter().filter(|b| !b.is_empty()).take(limit) {
        let skip = |reason: String| VerifySkip {
            block_x: block.block_x(),
            block_y: block.block_y(),
            reason,
        };
        if layout.total_qubits() > MAX_QUBITS {
            skips.push(skip(
                SimError::QubitBudget {
                    needed: layout.total_qubits(),
                    max: MAX_QUBITS,
                }
                .to_string(),
            ));
            continue;
        }
        let sim = |e: SimError| {
            CliError::Verify(format!("block ({}, {}): {e}", block.block_x(), block.block_y()))
        };
        let expected: QuantumState = expected_state(block, layout).map_err(sim)?;
        let efrqi = build_efrqi_circuit(block, layout).map_err(sim)?;
        let scm = build_scmneqr_circuit(block, layout).map_err(sim)?;
        if let Some(d) = dumps.as_deref_mut() {
            let stem = format!("circuits/block_{}_{}", block.block_x(), block.block_y());
            d.push((format!("{stem}_{}.txt", Scheme::Efrqi), efrqi.dump()));
            d.push((format!("{stem}_{}.txt", Scheme::Scmneqr), scm.dump()));
        }
        let efrqi_state: QuantumState = simulate(&efrqi, SimulationMode::Unitary).map_err(sim)?;
        let scm_state: QuantumState = simulate(&scm, SimulationMode::Channel).map_err(sim)?;
        let readout = idealized_readout::<f64>(&scm).map_err(sim)?;
        let exact = (0..block.s_y()).all(|y| {
            (0..block.s_x()).all(|x| {
                readout.is_recoverable(x, y) && readout.magnitude(x, y) == block.coeff(x, y).unsigned_abs()
            })
        });
        rows.push(VerifyRow {
            block_x: block.block_x(),
            block_y: block.block_y(),
            n_tcn: block.n_tcn(),
            efrqi_fidelity: fidelity(&expected, &efrqi_state).map_err(sim)?,
            scmneqr_channel_fidelity: fidelity(&expected, &scm_state).map_err(sim)?,
            idealized_decode_exact: exact,
            unrecoverable_positions: decode_block(&scm_state, layout).map_err(sim)?.unrecoverable_count(),
        });
    }
    Ok((rows, skips))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_cells() {
        assert_eq!(psnr_cell(f64::INFINITY), "inf");
        assert_eq!(psnr_cell(41.25), "41.250000");
    }

    #[test]
    fn synth_and_missing_inputs() {
        assert_eq!(load_input("synth:constant:7:4x2").unwrap().data(), &[7u8; 8]);
        let err = load_input("/no/such/image.pgm").unwrap_err();
        assert!(err.to_string().contains("/no/such/image.pgm"));
        assert!(matches!(load_input("synth:spiral:4x4"), Err(CliError::Input(_))));
    }

    #[test]
    fn verify_small_blocks() {
        let layout = RegisterLayout::square(2, 2).unwrap();
        let blocks = vec![
            QuantumBlock::new(0, 0, 2, 2, vec![0; 4], 2).unwrap(),
            QuantumBlock::new(1, 0, 2, 2, vec![3, 0, 0, 0], 2).unwrap(),
            QuantumBlock::new(0, 1, 2, 2, vec![0, -5, 0, 1], 2).unwrap(),
        ];
        let mut dumps = Vec::new();
        let (rows, skips) = verify_blocks(&blocks, &layout, 4, Some(&mut dumps)).unwrap();
        assert!(skips.is_empty());
        assert_eq!(rows.len(), 2);
        assert_eq!(dumps.len(), 4);
        assert_eq!((rows[0].block_x, rows[0].n_tcn), (1, 1));
        // one coefficient on a 2x2 block: (N + (S - N)^2) / S^2 = 10 / 16
        assert!((rows[0].scmneqr_channel_fidelity - 0.625).abs() < 1e-12);
        assert!(rows[0].idealized_decode_exact);
        // -5 does not fit in two value qubits
        assert!(!rows[1].idealized_decode_exact);
        assert!(rows.iter().all(|r| r.efrqi_fidelity > 1.0 - 1e-10));
        assert!(rows.iter().all(|r| r.unrecoverable_positions > 0));
        let (limited, _) = verify_blocks(&blocks, &layout, 1, None).unwrap();
        assert_eq!(limited.len(), 1);
    }
}
