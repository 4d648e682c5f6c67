use super::CheckReport;
use crate::error::{invalid, Result};

/// Largest `k` for which the demo runs.
pub const MAX_K: usize = 14;
/// Largest `k` for which the greedy packing is compared with exhaustive search.
pub const BRUTE_FORCE_K: usize = 4;
/// Floor on `ln(count)/k`.
pub const RATE_FLOOR: f64 = 0.05;

/// Two vertices of `{±δ}^k` at Hamming distance `h` are `2δ√h` apart, which
/// exceeds `δ√k/2` exactly when `16h > k`.
fn separated(a: u32, b: u32, k: usize) -> bool {
    16 * (a ^ b).count_ones() as usize > k
}

/// Greedy packing of the vertices of `{±δ}^k` in lexicographic order.
pub fn greedy_packing(k: usize) -> Vec<u32> {
    let mut chosen: Vec<u32> = Vec::new();
    for v in 0..(1u32 << k) {
        if chosen.iter().all(|&u| separated(u, v, k)) {
            chosen.push(v);
        }
    }
    chosen
}

/// Size of a largest packing, by exhaustive search over vertex subsets.
pub fn brute_force_packing(k: usize) -> Result<usize> {
    if k > BRUTE_FORCE_K {
        return Err(invalid(format!(
            "exhaustive packing is limited to k <= {BRUTE_FORCE_K}"
        )));
    }
    let v = 1usize << k;
    let mut best = 0;
    for mask in 0u64..(1u64 << v) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let members: Vec<u32> = (0..v as u32).filter(|&i| mask >> i & 1 == 1).collect();
        let ok = members
            .iter()
            .enumerate()
            .all(|(i, &a)| members[i + 1..].iter().all(|&b| separated(a, b, k)));
        if ok {
            best = size;
        }
    }
    Ok(best)
}

/// Greedy packing of `{±δ}^k` at separation `δ√k/2`, reporting `ln(count)/k`.
///
/// The packing constant is not known in closed form, so only a positive
/// floor is checked, plus optimality against exhaustive search for small `k`.
pub fn hypercube_packing_demo(k: usize, delta: f64) -> Result<CheckReport> {
    if k == 0 || k > MAX_K {
        return Err(invalid(format!("k must lie in 1..={MAX_K}, got {k}")));
    }
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    let count = greedy_packing(k).len();
    let rate = (count as f64).ln() / k as f64;
    let optimal = if k <= BRUTE_FORCE_K {
        Some(brute_force_packing(k)?)
    } else {
        None
    };
    let passed = rate >= RATE_FLOOR && optimal.is_none_or(|o| count >= o);
    let mut note = format!(
        "count {count} at radius {:.4e}; floor is a regression value",
        delta * (k as f64).sqrt() / 2.0
    );
    if let Some(o) = optimal {
        note.push_str(&format!("; exhaustive optimum {o}"));
    }
    Ok(CheckReport {
        name: "hypercube_packing".into(),
        passed,
        statistic: rate,
        tolerance: RATE_FLOOR,
        replications: 1,
        seed: 0,
        exploratory: false,
        note,
    })
}
