//! Ratio reports: exact rational cost ratios plus the CSV/text presentation
//! the harness writes per run.

use num_integer::Integer;

/// Reduce `num/den` by their gcd.
pub fn reduced_ratio(num: u128, den: u128) -> (u128, u128) {
    if den == 0 {
        return (num, 0);
    }
    // gcd with a nonzero argument is nonzero.
    let g = num.gcd(&den);
    (num / g, den / g)
}

/// Decimal presentation of `num/den` with six fractional digits.
pub fn ratio_decimal(num: u128, den: u128) -> String {
    if den == 0 {
        return "inf".to_string();
    }
    let whole = num / den;
    let frac = ((num % den) * 1_000_000 + den / 2) / den;
    format!("{whole}.{frac:06}")
}

/// Compare two ratios `a_n/a_d` and `b_n/b_d` exactly.
pub fn ratio_gt(a_n: u128, a_d: u128, b_n: u128, b_d: u128) -> bool {
    // Cross-multiplication via 256-bit-safe splitting is unnecessary at the
    // magnitudes the harness produces; fall back to bignum when needed.
    match (a_n.checked_mul(b_d), b_n.checked_mul(a_d)) {
        (Some(lhs), Some(rhs)) => lhs > rhs,
        _ => {
            let lhs = num_bigint::BigUint::from(a_n) * num_bigint::BigUint::from(b_d);
            let rhs = num_bigint::BigUint::from(b_n) * num_bigint::BigUint::from(a_d);
            lhs > rhs
        }
    }
}

/// One experiment's summary: costs, exact ratio and stream metadata.
#[derive(Debug, Clone)]
pub struct RatioReport {
    pub mechanism: String,
    pub baseline: String,
    pub n: usize,
    pub machines: u32,
    pub p_max: u64,
    pub w_max: u128,
    pub cost_alg: u128,
    pub cost_base: u128,
    /// Largest per-job completion ratio c_j / c*_j, as an exact rational.
    pub max_perjob: (u128, u128),
    pub seed: u64,
}

impl RatioReport {
    pub fn ratio(&self) -> (u128, u128) {
        reduced_ratio(self.cost_alg, self.cost_base)
    }

    pub const CSV_HEADER: &'static str =
        "mechanism,baseline,n,m,p_max,w_max,cost_alg,cost_base,ratio,max_perjob_ratio,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.mechanism,
            self.baseline,
            self.n,
            self.machines,
            self.p_max,
            self.w_max,
            self.cost_alg,
            self.cost_base,
            ratio_decimal(self.cost_alg, self.cost_base),
            ratio_decimal(self.max_perjob.0, self.max_perjob.1),
            self.seed
        )
    }

    pub fn report_text(&self) -> String {
        let (num, den) = self.ratio();
        let (pj_n, pj_d) = reduced_ratio(self.max_perjob.0, self.max_perjob.1);
        [
            format!("mechanism: {}", self.mechanism),
            format!("baseline: {}", self.baseline),
            format!("n: {}", self.n),
            format!("machines: {}", self.machines),
            format!("p_max: {}", self.p_max),
            format!("w_max: {}", self.w_max),
            format!("cost_alg: {}", self.cost_alg),
            format!("cost_base: {}", self.cost_base),
            format!("ratio_exact: {num}/{den}"),
            format!(
                "ratio_decimal: {}",
                ratio_decimal(self.cost_alg, self.cost_base)
            ),
            format!("max_perjob_ratio_exact: {pj_n}/{pj_d}"),
            format!("seed: {}", self.seed),
        ]
        .join("\n")
    }
}
