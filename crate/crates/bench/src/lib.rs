//! Fixtures shared by the benchmarks.

use refsde_core::StepPath;

/// Deterministic `d`-dimensional step path with `jumps` jumps on `[0, 1]`,
/// wandering with amplitude `scale` so that it leaves most domains often.
pub fn wandering_path(d: usize, jumps: usize, scale: f64) -> StepPath {
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut unit = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let times: Vec<f64> = (0..=jumps).map(|k| k as f64 / (jumps + 1) as f64).collect();
    let mut x = vec![0.0; d];
    let mut values = Vec::with_capacity(times.len() * d);
    values.extend_from_slice(&x);
    for _ in 0..jumps {
        for xi in x.iter_mut() {
            *xi += scale * unit();
        }
        values.extend_from_slice(&x);
    }
    StepPath::new(d, times, values, 1.0).unwrap()
}
