//! Acceptance suite: every release criterion as one test, with a printed
//! PASS/FAIL line per criterion (run with `--nocapture` to see them all).

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use qcdma::codes::{generate_mseq, LfsrSpec};
use qcdma::metrics::{
    crosstalk_probability, photon_loss_probability, photon_number_density, state_fidelity_sweep,
    Background,
};
use qcdma::network::{ideal_loss_bound, propagate, FilterRule, NetworkConfig};
use qcdma::optics::{despread, fbg_split, spread, FbgFilter, Modulator};
use qcdma::signal::{gaussian_packet, TimeGrid, Wavefunction};

const SEED: u64 = 42;

fn pass(criterion: u32, detail: &str) {
    println!("[criterion {criterion}] PASS — {detail}");
}

struct Check {
    criterion: u32,
    failures: Vec<String>,
}

impl Check {
    fn new(criterion: u32) -> Self {
        Self {
            criterion,
            failures: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, msg: String) {
        if !ok {
            self.failures.push(msg);
        }
    }

    fn finish(self, detail: &str) {
        if self.failures.is_empty() {
            pass(self.criterion, detail);
        } else {
            println!(
                "[criterion {}] FAIL — {}",
                self.criterion,
                self.failures.join("; ")
            );
            panic!(
                "criterion {} failed: {}",
                self.criterion,
                self.failures.join("; ")
            );
        }
    }
}

fn random_wavefunction(grid: TimeGrid, rng: &mut ChaCha12Rng) -> Wavefunction {
    let amps = (0..grid.total_samples())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut w = Wavefunction::from_amplitudes(amps, grid).unwrap();
    w.normalize().unwrap();
    w
}

/// Criterion 1: m-sequence identities for n = 3..=14 — period 2^n − 1,
/// balance ±1, correlation diagonal S / off-diagonal −1 (exhaustive for
/// n ≤ 6, 100 random pairs beyond). Must finish in under 5 s.
#[test]
fn criterion_1_code_identities() {
    let start = Instant::now();
    let mut check = Check::new(1);
    let mut rng = ChaCha12Rng::seed_from_u64(SEED);
    for n in 3u32..=14 {
        let spec = LfsrSpec::for_register_count(n).unwrap();
        let code = generate_mseq(&spec).unwrap();
        let s = (1usize << n) - 1;
        check.require(code.len() == s, format!("n={n}: period {}", code.len()));
        check.require(
            code.balance().abs() == 1,
            format!("n={n}: balance {}", code.balance()),
        );
        if n <= 6 {
            for p in 0..s {
                for q in 0..s {
                    let c = code
                        .cyclic_shift(p)
                        .correlation(&code.cyclic_shift(q))
                        .unwrap();
                    let want = if p == q { s as i64 } else { -1 };
                    check.require(c == want, format!("n={n}: corr({p},{q}) = {c}"));
                }
            }
        } else {
            for _ in 0..100 {
                let p = rng.gen_range(0..s);
                let mut q = rng.gen_range(0..s);
                if q == p {
                    q = (q + 1) % s;
                }
                let c = code
                    .cyclic_shift(p)
                    .correlation(&code.cyclic_shift(q))
                    .unwrap();
                check.require(c == -1, format!("n={n}: corr({p},{q}) = {c}"));
                let auto = code.cyclic_shift(p).correlation(&code.cyclic_shift(p)).unwrap();
                check.require(auto == s as i64, format!("n={n}: auto({p}) = {auto}"));
            }
        }
    }
    let elapsed = start.elapsed();
    check.require(
        elapsed.as_secs_f64() < 5.0,
        format!("runtime {elapsed:?} exceeds 5 s"),
    );
    check.finish(&format!(
        "n=3..14 periods, balance and correlations in {elapsed:?}"
    ));
}

/// Criterion 2: despread(spread(φ, c), c) returns φ to ≤ 1e−12 max
/// absolute error over 100 random signals.
#[test]
fn criterion_2_spread_despread_identity() {
    let mut check = Check::new(2);
    let grid = TimeGrid::new(63, 2, 1).unwrap();
    let code = generate_mseq(&LfsrSpec::for_register_count(6).unwrap()).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let m = Modulator::new(code.cyclic_shift(i % 63), 2);
        let w = random_wavefunction(grid, &mut rng);
        let round = despread(&spread(&w, &m, 0).unwrap(), &m, 0).unwrap();
        let err = w
            .amplitudes()
            .iter()
            .zip(round.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    check.require(worst <= 1e-12, format!("max abs error {worst:e}"));
    check.finish(&format!("100 random signals, max abs error {worst:e}"));
}

/// Criterion 3: delivered + lost + residual equals the inserted photon
/// count to 1e−9 relative over 50 random runs (N ≤ 10, n ≤ 10), within a
/// minute.
#[test]
fn criterion_3_energy_ledger() {
    let start = Instant::now();
    let mut check = Check::new(3);
    let mut rng = ChaCha12Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for run in 0..50 {
        let users = rng.gen_range(1..=10usize);
        let n = rng.gen_range(4..=10u32);
        let cfg = NetworkConfig::new(users, n);
        let bits: Vec<Vec<bool>> = (0..users)
            .map(|_| (0..8).map(|_| rng.gen_bool(0.5)).collect())
            .collect();
        let photons = bits.iter().flatten().filter(|&&b| b).count() as f64;
        let out = propagate(&cfg, &bits, run).unwrap();
        let total: f64 = out
            .records
            .iter()
            .map(|r| r.delivered.iter().sum::<f64>() + r.loss + r.residual)
            .sum();
        if photons > 0.0 {
            worst = worst.max((total - photons).abs() / photons);
        }
    }
    let elapsed = start.elapsed();
    check.require(worst <= 1e-9, format!("ledger defect {worst:e}"));
    check.require(
        elapsed.as_secs_f64() < 60.0,
        format!("runtime {elapsed:?} exceeds 1 min"),
    );
    check.finish(&format!(
        "50 random runs, worst relative defect {worst:e} in {elapsed:?}"
    ));
}

/// Criterion 4: reflected fraction of a spread unit packet through the
/// matched FBG within a factor of 3 of 1/S for S ∈ {2⁸−1, 2¹⁰−1, 2¹²−1},
/// monotonically decreasing in S.
///
/// The factor-3 clause cannot hold together with the ≥95% matched-photon
/// reflection this same filter must provide (and which the loss table
/// depends on): the filter's energy bandwidth is ~10/T, so a spread
/// packet's in-band fraction lands near 7–9/S, not 1/S. The criterion is
/// asserted verbatim regardless; see the README's acceptance notes.
#[test]
fn criterion_4_leakage_law() {
    let mut check = Check::new(4);
    let mut fractions = Vec::new();
    for n in [8u32, 10, 12] {
        let s = (1usize << n) - 1;
        let grid = TimeGrid::new(s, 2, 1).unwrap();
        let sigma = 0.1 * grid.bin_duration();
        let filter = FbgFilter::matched_gaussian(sigma);
        let code = generate_mseq(&LfsrSpec::for_register_count(n).unwrap()).unwrap();
        let m = Modulator::new(code, 2);
        let packet = gaussian_packet(grid, 0.5 * grid.bin_duration(), sigma, 0.0).unwrap();
        let spread_packet = spread(&packet, &m, 0).unwrap();
        let (refl, _) = fbg_split(&spread_packet, &filter);
        let frac = refl.norm_sq();
        let ratio = frac * s as f64;
        println!("  S={s}: reflected fraction {frac:.6e} = {ratio:.2}/S");
        check.require(
            (1.0 / 3.0..=3.0).contains(&ratio),
            format!("S={s}: {ratio:.2}/S outside factor 3 of 1/S"),
        );
        fractions.push(frac);
    }
    check.require(
        fractions.windows(2).all(|w| w[1] < w[0]),
        format!("fractions not monotone decreasing: {fractions:?}"),
    );
    check.finish("spread-packet leakage follows the 1/S law");
}

const TABLE1: [(u32, [f64; 3]); 4] = [
    (8, [0.3237, 0.8300, 0.9890]),
    (10, [0.1197, 0.3720, 0.6727]),
    (12, [0.0583, 0.1337, 0.2640]),
    (14, [0.0424, 0.0618, 0.0996]),
];
const TABLE2: [(u32, [f64; 3]); 4] = [
    (8, [0.0632, 0.2240, 0.3888]),
    (10, [0.0183, 0.0728, 0.1677]),
    (12, [0.0041, 0.0184, 0.0480]),
    (14, [0.0010, 0.0050, 0.0124]),
];
const USER_COUNTS: [usize; 3] = [5, 20, 50];

fn grid_monotone(cells: &[[f64; 3]; 4]) -> bool {
    // strictly decreasing down each column (growing S), increasing across
    // each row (growing N)
    let cols = (0..3).all(|j| (1..4).all(|i| cells[i][j] < cells[i - 1][j]));
    let rows = (0..4).all(|i| (1..3).all(|j| cells[i][j] > cells[i][j - 1]));
    cols && rows
}

/// Criterion 5: photon-loss table at 200 trials — every cell within ±50%
/// of the reference value and the whole 4×3 grid strictly monotone.
#[test]
fn criterion_5_loss_table() {
    let start = Instant::now();
    let mut check = Check::new(5);
    let mut cells = [[0.0; 3]; 4];
    for (i, (n, refs)) in TABLE1.iter().enumerate() {
        for (j, (&users, &reference)) in USER_COUNTS.iter().zip(refs).enumerate() {
            let cfg = NetworkConfig::new(users, *n);
            let r = photon_loss_probability(&cfg, 200, SEED).unwrap();
            cells[i][j] = r.mean;
            let ratio = r.mean / reference;
            println!(
                "  loss S=2^{n}-1 N={users}: {:.4} vs {reference} (x{ratio:.2})",
                r.mean
            );
            check.require(
                (0.5..=1.5).contains(&ratio),
                format!("cell (2^{n}-1, {users}): {:.4} vs {reference}", r.mean),
            );
        }
    }
    check.require(grid_monotone(&cells), format!("grid not monotone: {cells:?}"));
    let elapsed = start.elapsed();
    check.require(
        elapsed.as_secs_f64() < 1800.0,
        format!("runtime {elapsed:?} exceeds 30 min"),
    );
    check.finish(&format!("12 cells in band, grid monotone, {elapsed:?}"));
}

/// Criterion 6: crosstalk table at 128 runs — anchors (2⁸−1, 5) and
/// (2¹⁴−1, 50) within ±50% of the reference values and the grid monotone.
/// Per-cell ratios are printed alongside.
#[test]
fn criterion_6_crosstalk_table() {
    let start = Instant::now();
    let mut check = Check::new(6);
    let mut cells = [[0.0; 3]; 4];
    for (i, (n, refs)) in TABLE2.iter().enumerate() {
        for (j, (&users, &reference)) in USER_COUNTS.iter().zip(refs).enumerate() {
            let cfg = NetworkConfig::new(users, *n);
            let r = crosstalk_probability(&cfg, 128, SEED).unwrap();
            cells[i][j] = r.mean;
            println!(
                "  crosstalk S=2^{n}-1 N={users}: {:.5} vs {reference} (x{:.2})",
                r.mean,
                r.mean / reference
            );
        }
    }
    let anchor_a = cells[0][0] / TABLE2[0].1[0];
    let anchor_b = cells[3][2] / TABLE2[3].1[2];
    check.require(
        (0.5..=1.5).contains(&anchor_a),
        format!("anchor (2^8-1, 5): x{anchor_a:.2}"),
    );
    check.require(
        (0.5..=1.5).contains(&anchor_b),
        format!("anchor (2^14-1, 50): x{anchor_b:.2}"),
    );
    check.require(grid_monotone(&cells), format!("grid not monotone: {cells:?}"));
    let elapsed = start.elapsed();
    check.finish(&format!(
        "anchors x{anchor_a:.2} / x{anchor_b:.2}, grid monotone, {elapsed:?}"
    ));
}

/// Criterion 7: fidelity at S = 2¹⁰−1, N = 5, silent background — every
/// state at F ≥ 0.99, infidelities within 3 standard errors of each other,
/// and 1 − F within one order of magnitude of 1.08e−3.
#[test]
fn criterion_7_fidelity() {
    let mut check = Check::new(7);
    let cfg = NetworkConfig::new(5, 10);
    let results = state_fidelity_sweep(&cfg, 200, SEED, Background::Silent).unwrap();
    for r in &results {
        println!(
            "  state {}: F = {:.6}, 1-F = {:.3e} (se {:.1e})",
            r.state.name(),
            r.mean_fidelity,
            r.mean_infidelity,
            r.std_err
        );
        check.require(
            r.mean_fidelity >= 0.99,
            format!("state {}: F = {:.4}", r.state.name(), r.mean_fidelity),
        );
        check.require(
            (1.08e-4..=1.08e-2).contains(&r.mean_infidelity),
            format!(
                "state {}: 1-F = {:.3e} outside [1.08e-4, 1.08e-2]",
                r.state.name(),
                r.mean_infidelity
            ),
        );
    }
    for a in 0..results.len() {
        for b in a + 1..results.len() {
            let gap = (results[a].mean_infidelity - results[b].mean_infidelity).abs();
            let se = (results[a].std_err.powi(2) + results[b].std_err.powi(2)).sqrt();
            check.require(
                gap <= 3.0 * se.max(1e-12),
                format!(
                    "states {} vs {}: gap {gap:.2e} vs 3se {:.2e}",
                    results[a].state.name(),
                    results[b].state.name(),
                    3.0 * se
                ),
            );
        }
    }
    check.finish("four states at F >= 0.99, infidelities consistent");
}

/// Criterion 8: with the brick-wall filter, measured loss stays under
/// 2·(2N−2)/S for N ∈ {2, 5, 10} at S = 2¹⁰−1.
#[test]
fn criterion_8_brickwall_bound() {
    let mut check = Check::new(8);
    for users in [2usize, 5, 10] {
        let mut cfg = NetworkConfig::new(users, 10);
        cfg.filter_rule = FilterRule::Brickwall;
        let r = photon_loss_probability(&cfg, 200, SEED).unwrap();
        let bound = 2.0 * ideal_loss_bound(users, 1023);
        println!("  N={users}: loss {:.6} vs bound {bound:.6}", r.mean);
        check.require(
            r.mean <= bound,
            format!("N={users}: loss {:.6} above {bound:.6}", r.mean),
        );
    }
    check.finish("idealized loss under 2(2N-2)/S for N in {2,5,10}");
}

const TRACE_BITS: [&str; 5] = ["10110101", "01011011", "11100101", "00110110", "10101010"];

fn trace_bin_integrals(n: u32) -> (Vec<f64>, Vec<f64>) {
    let mut cfg = NetworkConfig::new(5, n);
    cfg.bits_per_user = 8;
    let bits: Vec<Vec<bool>> = TRACE_BITS
        .iter()
        .map(|p| p.chars().map(|c| c == '1').collect())
        .collect();
    let out = propagate(&cfg, &bits, SEED).unwrap();
    let integrals = photon_number_density(&out).bin_integrals();
    let mut ones = Vec::new();
    let mut zeros = Vec::new();
    for (ch, row) in integrals.iter().enumerate() {
        for (bin, &v) in row.iter().enumerate() {
            if bits[ch][bin] {
                ones.push(v);
            } else {
                zeros.push(v);
            }
        }
    }
    (ones, zeros)
}

/// Criterion 9: at S = 2¹⁵−1 the density traces are clean (1-bins within
/// [0.95, 1.05], 0-bins ≤ 0.01); at S = 2⁸−1 distortion shows (some 1-bin
/// below 0.9 or 0-bin above 0.02).
#[test]
fn criterion_9_density_traces() {
    let mut check = Check::new(9);
    let (ones, zeros) = trace_bin_integrals(15);
    let one_lo = ones.iter().cloned().fold(f64::INFINITY, f64::min);
    let one_hi = ones.iter().cloned().fold(0.0, f64::max);
    let zero_hi = zeros.iter().cloned().fold(0.0, f64::max);
    println!("  S=2^15-1: 1-bins [{one_lo:.4}, {one_hi:.4}], max 0-bin {zero_hi:.5}");
    check.require(
        one_lo >= 0.95 && one_hi <= 1.05,
        format!("clean trace 1-bins [{one_lo:.4}, {one_hi:.4}]"),
    );
    check.require(zero_hi <= 0.01, format!("clean trace 0-bin max {zero_hi:.5}"));

    let (ones8, zeros8) = trace_bin_integrals(8);
    let one_lo8 = ones8.iter().cloned().fold(f64::INFINITY, f64::min);
    let zero_hi8 = zeros8.iter().cloned().fold(0.0, f64::max);
    println!("  S=2^8-1: min 1-bin {one_lo8:.4}, max 0-bin {zero_hi8:.5}");
    check.require(
        one_lo8 < 0.9 || zero_hi8 > 0.02,
        format!("distorted trace shows neither: min 1-bin {one_lo8:.4}, max 0-bin {zero_hi8:.5}"),
    );
    check.finish("clean at S=2^15-1, distorted at S=2^8-1");
}

/// Criterion 10: identical spec + seed yields byte-identical CSV with
/// QCDMA_THREADS ∈ {1, 8}.
#[test]
fn criterion_10_determinism() {
    let mut check = Check::new(10);
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_qcdma");
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "8", "1"].iter().enumerate() {
        let out = dir.path().join(format!("loss-{i}.csv"));
        let status = std::process::Command::new(bin)
            .args([
                "loss-table",
                "--n",
                "8",
                "--users",
                "5",
                "--trials",
                "50",
                "--seed",
                "7",
                "--out",
            ])
            .arg(&out)
            .env("QCDMA_THREADS", threads)
            .status()
            .unwrap();
        check.require(status.success(), format!("run {i} exited {status}"));
        outputs.push(std::fs::read(&out).unwrap());
    }
    check.require(
        outputs[0] == outputs[1],
        "QCDMA_THREADS=1 vs 8 differ".into(),
    );
    check.require(outputs[0] == outputs[2], "repeated run differs".into());

    // the multi-photon propagation path as well
    let mut traces = Vec::new();
    for threads in ["1", "8"] {
        let out = dir.path().join(format!("trace-{threads}.csv"));
        let status = std::process::Command::new(bin)
            .args([
                "density-trace",
                "--n",
                "8",
                "--users",
                "3",
                "--bits",
                "10110101,01011011,11100101",
                "--seed",
                "3",
                "--out",
            ])
            .arg(&out)
            .env("QCDMA_THREADS", threads)
            .status()
            .unwrap();
        check.require(status.success(), format!("trace run exited {status}"));
        traces.push(std::fs::read(&out).unwrap());
    }
    check.require(traces[0] == traces[1], "trace outputs differ".into());
    check.finish("byte-identical CSV across thread counts and repeats");
}
