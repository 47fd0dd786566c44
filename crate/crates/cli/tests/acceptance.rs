//! Acceptance checks. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use qbc_cli::{cmd_compress, cmd_rdc, cmd_verify, RunConfig};
use qbc_core::accounting::{s_state_scmneqr, BitRateReport, BlockAddressMode};
use qbc_core::dct::Block8;
use qbc_core::{
    bit_rate, build_efrqi_circuit, expected_state, fidelity, simulate, synth_image, tile_quantum_blocks, BlockGrid,
    Dct8, GrayImage, ImageCodec, PipelineConfig, QuantumBlock, QuantumState, RegisterLayout, Scheme,
    SimulationMode, SynthKind, DEFAULT_QFS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

fn log2_by_halving(mut n: usize) -> u64 {
    let mut k = 0;
    while n > 1 {
        n /= 2;
        k += 1;
    }
    k
}

fn random_block(rng: &mut ChaCha8Rng, s_x: usize, s_y: usize, q: u32, max: i32) -> QuantumBlock {
    let density: f64 = rng.gen();
    let coeffs = (0..s_x * s_y)
        .map(|_| if rng.gen_bool(density) { rng.gen_range(-max..=max) } else { 0 })
        .collect();
    QuantumBlock::new(0, 0, s_x, s_y, coeffs, q).unwrap()
}

fn test_images(sizes: &[usize]) -> Vec<(String, GrayImage)> {
    let kinds = [
        SynthKind::Gradient,
        SynthKind::Checkerboard(2),
        SynthKind::Checkerboard(4),
        SynthKind::Checkerboard(8),
        SynthKind::Constant(128),
        SynthKind::Constant(200),
    ];
    let mut out = Vec::new();
    for &n in sizes {
        for k in kinds {
            out.push((format!("{k}@{n}"), synth_image(k, n, n).unwrap()));
        }
    }
    out
}

fn ac1_state_bits() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sizes = [2usize, 4, 8, 16];
    let mut full = 0;
    for i in 0..1000 {
        let (s_x, s_y) = if i % 2 == 0 {
            let s = sizes[rng.gen_range(0..4)];
            (s, s)
        } else {
            (sizes[rng.gen_range(0..4)], sizes[rng.gen_range(0..4)])
        };
        let block = random_block(&mut rng, s_x, s_y, 8, 300);
        let n = block.coeffs().iter().filter(|&&c| c != 0).count() as u64;
        let got = s_state_scmneqr(&block).map_err(|e| e.to_string())?;
        let want = (log2_by_halving(s_x) + log2_by_halving(s_y) + 2) * n;
        ensure(got == want, || format!("{s_x}x{s_y} block with {n} non-zeros: {got} != {want}"))?;
        if s_x == 16 && s_y == 16 {
            ensure(got == 10 * n, || format!("16x16: {got} != 10*{n}"))?;
            full += 1;
        }
    }
    let t = within(start, Duration::from_secs(1))?;
    Ok(format!("1000 blocks ({full} of 16x16) in {t:.2?}"))
}

fn terms_add_up(r: &BitRateReport) -> bool {
    r.br() == r.q_ones() + r.s_state() + r.s_bit() + r.a_bit() + r.b_e()
}

fn ac2_rate_identity() -> Check {
    let mut checked = 0;
    let modes = [
        BlockAddressMode::PerBlockAddress,
        BlockAddressMode::Fixed,
        BlockAddressMode::PerCoefficient,
    ];
    for (q, side) in [(8, 16), (4, 4), (12, 8)] {
        let layout = RegisterLayout::square(q, side).unwrap();
        for mode in modes {
            let codec = ImageCodec::new(PipelineConfig { layout, b_e_mode: mode });
            for (name, img) in test_images(&[64, 72]) {
                let prepared = codec.prepare(&img);
                for qf in DEFAULT_QFS {
                    let run = codec.run(&prepared, qf, &Scheme::ALL).map_err(|e| e.to_string())?;
                    for r in &run.reports {
                        ensure(terms_add_up(r) && r.identity_holds(), || {
                            format!("{name} qf={qf} {mode}: {}", r.to_key_value())
                        })?;
                        checked += 1;
                    }
                }
            }
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        input: "synth:gradient:96x80".into(),
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    cmd_compress(&cfg).map_err(|e| e.to_string())?;
    let csv = fs::read_to_string(dir.path().join("report.csv")).map_err(|e| e.to_string())?;
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let n = |i: usize| f[i].parse::<u64>().unwrap();
        ensure(n(3) + n(4) + n(5) + n(6) + n(7) == n(8), || format!("report.csv row `{line}`"))?;
        checked += 1;
    }
    Ok(format!("{checked} reports"))
}

fn ac3_scheme_ordering() -> Check {
    let start = Instant::now();
    let layout = RegisterLayout::default();
    let codec = ImageCodec::new(PipelineConfig::default());
    let (mut compared, mut empty) = (0, 0);
    let mut worst_ratio: f64 = 0.0;
    for (name, img) in test_images(&[64, 128, 512]) {
        let prepared = codec.prepare(&img);
        for qf in 1..=64 {
            let quantized = codec.quantize(&prepared, qf).map_err(|e| e.to_string())?;
            let plane = codec.coefficient_plane(&prepared, &quantized);
            let blocks = tile_quantum_blocks(&plane, &layout).map_err(|e| e.to_string())?;
            let grid = BlockGrid::for_plane(plane.width(), plane.height(), &layout);
            let s = bit_rate(&blocks, Scheme::Scmneqr, &layout, grid).map_err(|e| e.to_string())?;
            let e = bit_rate(&blocks, Scheme::Efrqi, &layout, grid).map_err(|e| e.to_string())?;
            ensure(terms_add_up(&s) && terms_add_up(&e), || format!("{name} qf={qf}: terms"))?;
            if s.n_tcn() == 0 {
                ensure(s.br() == 0 && e.br() == 0, || format!("{name} qf={qf}: empty image costs bits"))?;
                empty += 1;
                continue;
            }
            let ratio = s.br() as f64 / e.br() as f64;
            ensure(s.br() < e.br() && ratio < 1.0, || {
                format!("{name} qf={qf}: SCMNEQR {} >= EFRQI {}", s.br(), e.br())
            })?;
            ensure(s.s_state() * 18 == e.s_state() * 10, || {
                format!("{name} qf={qf}: s_state {} vs {} not 10:18", s.s_state(), e.s_state())
            })?;
            worst_ratio = worst_ratio.max(ratio);
            compared += 1;
        }
    }
    let t = within(start, Duration::from_secs(30))?;
    Ok(format!(
        "{compared} non-empty runs, {empty} empty, max br ratio {worst_ratio:.4}, {t:.2?}"
    ))
}

fn efrqi_matches(block: &QuantumBlock, layout: &RegisterLayout) -> Result<f64, String> {
    let expected: QuantumState = expected_state(block, layout).map_err(|e| e.to_string())?;
    let circuit = build_efrqi_circuit(block, layout).map_err(|e| e.to_string())?;
    let state: QuantumState = simulate(&circuit, SimulationMode::Unitary).map_err(|e| e.to_string())?;
    let f = fidelity(&expected, &state).map_err(|e| e.to_string())?;
    ensure(f >= 1.0 - 1e-10, || format!("fidelity {f} for {:?}", block.coeffs()))?;
    Ok(f)
}

fn ac4_efrqi_preparation() -> Check {
    let start = Instant::now();
    let mut min_f: f64 = 1.0;
    let small = RegisterLayout::square(2, 2).unwrap();
    for code in 0..256u32 {
        let coeffs = (0..4).map(|i| ((code >> (2 * i)) & 3) as i32).collect();
        let block = QuantumBlock::for_layout(&small, coeffs).unwrap();
        min_f = min_f.min(efrqi_matches(&block, &small)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mid = RegisterLayout::square(4, 4).unwrap();
    for _ in 0..50 {
        let block = random_block(&mut rng, 4, 4, 4, 15);
        min_f = min_f.min(efrqi_matches(&block, &mid)?);
    }
    let full = RegisterLayout::default();
    for density in [0.05, 0.3, 0.7, 1.0] {
        let coeffs = (0..256)
            .map(|_| if rng.gen_bool(density) { rng.gen_range(-255..=255) } else { 0 })
            .collect();
        let block = QuantumBlock::for_layout(&full, coeffs).unwrap();
        min_f = min_f.min(efrqi_matches(&block, &full)?);
    }
    let t = within(start, Duration::from_secs(60))?;
    Ok(format!("306 blocks, min fidelity {min_f:.12}, {t:.2?}"))
}

fn read_verify(dir: &Path) -> Result<Vec<BTreeMap<String, String>>, String> {
    let text = fs::read_to_string(dir.join("verify.csv")).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty verify.csv")?.split(',').collect();
    Ok(lines
        .map(|l| header.iter().map(|h| h.to_string()).zip(l.split(',').map(str::to_string)).collect())
        .collect())
}

fn ac5_reset_semantics() -> Check {
    let cases = [
        ("synth:gradient:64x64", 8, 16, 8),
        ("synth:checkerboard:2:64x64", 8, 16, 8),
        ("synth:checkerboard:4:48x48", 2, 16, 8),
        ("synth:constant:200:32x32", 1, 16, 8),
        ("synth:gradient:32x32", 4, 4, 6),
        ("synth:checkerboard:2:16x16", 16, 2, 5),
    ];
    let (mut rows, mut exact, mut clamped_rows) = (0, 0, 0);
    for (input, qf, block, q) in cases {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = RunConfig {
            input: input.into(),
            qfs: vec![qf],
            block,
            q,
            verify_circuits: true,
            verify_block_limit: 6,
            output_dir: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        cmd_verify(&cfg).map_err(|e| format!("{input}: {e}"))?;
        let layout = cfg.layout().unwrap();
        let codec = ImageCodec::new(PipelineConfig {
            layout,
            b_e_mode: BlockAddressMode::default(),
        });
        let img = qbc_cli::load_input(input).map_err(|e| e.to_string())?;
        let run = codec.run(&codec.prepare(&img), qf, &[Scheme::Scmneqr]).map_err(|e| e.to_string())?;
        let positions = layout.positions() as f64;
        for row in read_verify(dir.path())? {
            let get = |k: &str| row[k].clone();
            let (bx, by): (usize, usize) = (get("block_x").parse().unwrap(), get("block_y").parse().unwrap());
            let n: f64 = get("n_tcn").parse().unwrap();
            let scm: f64 = get("scmneqr_channel_fidelity").parse().unwrap();
            let efrqi: f64 = get("efrqi_fidelity").parse().unwrap();
            let here = format!("{input} block ({bx},{by})");
            ensure(n >= 1.0, || format!("{here}: empty block verified"))?;
            ensure(efrqi >= 0.9999999999, || format!("{here}: EFRQI fidelity {efrqi}"))?;
            ensure(scm < 1.0 - 1e-6, || format!("{here}: SCMNEQR fidelity {scm}"))?;
            let oracle = (n + (positions - n).powi(2)) / (positions * positions);
            ensure((scm - oracle).abs() < 1e-9, || format!("{here}: fidelity {scm} vs {oracle}"))?;
            ensure(get("unrecoverable_positions") != "0", || format!("{here}: no lost positions"))?;
            let qb = run
                .blocks
                .iter()
                .find(|b| (b.block_x(), b.block_y()) == (bx, by))
                .ok_or_else(|| format!("{here}: block not in run"))?;
            if qb.clamped_count() == 0 {
                ensure(get("scmneqr_idealized_decode_exact") == "true", || {
                    format!("{here}: idealized decode not exact")
                })?;
                exact += 1;
            } else {
                clamped_rows += 1;
            }
            rows += 1;
        }
    }
    ensure(exact > 0, || "no unclamped block was verified".into())?;
    Ok(format!("{rows} blocks, {exact} unclamped decoded exactly, {clamped_rows} clamped"))
}

fn ac6_dct_round_trip() -> Check {
    let start = Instant::now();
    let dct = Dct8::new();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut max_err, mut max_rel): (f64, f64) = (0.0, 0.0);
    for i in 0..100_000 {
        let mut x: Block8<f64> = [[0.0; 8]; 8];
        for v in x.iter_mut().flatten() {
            *v = if i % 2 == 0 {
                rng.gen_range(0..=255u8) as f64
            } else {
                rng.gen_range(-512.0..768.0)
            };
        }
        let f = dct.forward(&x);
        let y = dct.inverse(&f);
        for (a, b) in x.iter().flatten().zip(y.iter().flatten()) {
            max_err = max_err.max((a - b).abs());
        }
        let energy: f64 = x.iter().flatten().map(|v| (v - 128.0).powi(2)).sum();
        let spectrum: f64 = f.coeffs().iter().flatten().map(|c| c * c).sum();
        if energy > 0.0 {
            max_rel = max_rel.max((energy - spectrum).abs() / energy);
        }
    }
    ensure(max_err <= 1e-9, || format!("round-trip error {max_err:e}"))?;
    ensure(max_rel <= 1e-6, || format!("energy mismatch {max_rel:e}"))?;
    let t = within(start, Duration::from_secs(10))?;
    Ok(format!("1e5 blocks, max error {max_err:.1e}, energy {max_rel:.1e}, {t:.2?}"))
}

fn ac7_rd_shape() -> Check {
    let codec = ImageCodec::new(PipelineConfig::default());
    let mut psnr_at = BTreeMap::new();
    let mut curves = 0;
    for (name, img) in test_images(&[64, 128, 512]) {
        let prepared = codec.prepare(&img);
        let mut prev: Option<(u64, Vec<u64>)> = None;
        for qf in DEFAULT_QFS {
            let run = codec.run(&prepared, qf, &Scheme::ALL).map_err(|e| e.to_string())?;
            let brs: Vec<u64> = run.reports.iter().map(|r| r.br()).collect();
            if let Some((n, b)) = &prev {
                ensure(run.n_tcn() <= *n, || format!("{name}: n_tcn rises at qf={qf}"))?;
                ensure(brs.iter().zip(b).all(|(x, y)| x <= y), || {
                    format!("{name}: br rises at qf={qf}: {b:?} -> {brs:?}")
                })?;
            }
            prev = Some((run.n_tcn(), brs));
            psnr_at.insert((name.clone(), qf), run.psnr_db);
        }
        curves += 1;
    }
    for n in [64, 128, 512] {
        let g = psnr_at[&(format!("gradient@{n}"), 1)];
        ensure(g >= 40.0, || format!("gradient@{n} PSNR at qf=1 is {g:.3} dB"))?;
        for k in [2, 4] {
            let name = format!("checkerboard:{k}@{n}");
            let (lo, hi) = (psnr_at[&(name.clone(), 64)], psnr_at[&(name.clone(), 1)]);
            ensure(lo < hi, || format!("{name}: PSNR {lo} at qf=64 vs {hi} at qf=1"))?;
        }
    }
    Ok(format!(
        "{curves} curves, gradient@512 qf=1 PSNR {:.2} dB",
        psnr_at[&("gradient@512".to_string(), 1)]
    ))
}

fn snapshot(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = fs::read(&path).map_err(|e| e.to_string())?;
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), bytes);
    }
    Ok(out)
}

fn ac8_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        input: "synth:checkerboard:4:200x136".into(),
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    cmd_rdc(&cfg).map_err(|e| e.to_string())?;
    let first = snapshot(dir.path())?;
    cmd_rdc(&cfg).map_err(|e| e.to_string())?;
    let second = snapshot(dir.path())?;
    for name in ["rdc.csv", "rdc.dat", "recon_qf1.pgm", "recon_qf64.pgm"] {
        ensure(first.contains_key(name), || format!("{name} missing"))?;
    }
    ensure(first == second, || "outputs differ between runs".into())?;
    Ok(format!("{} files byte-identical", first.len()))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 8] = [
        ("AC1 state-connection bits exact per block size", ac1_state_bits),
        ("AC2 bit rate equals the sum of its terms", ac2_rate_identity),
        ("AC3 reset scheme cheaper than double Toffoli", ac3_scheme_ordering),
        ("AC4 double-Toffoli circuit prepares the target state", ac4_efrqi_preparation),
        ("AC5 reset channel loses fidelity, per-branch decode exact", ac5_reset_semantics),
        ("AC6 DCT round trip and energy preservation", ac6_dct_round_trip),
        ("AC7 rate-distortion curve shape", ac7_rd_shape),
        ("AC8 rdc output deterministic", ac8_determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(why) => {
                println!("[FAIL] {name}: {why}");
                failed += 1;
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
