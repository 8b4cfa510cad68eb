use std::sync::OnceLock;

const TABLE_LEN: usize = 171;

fn table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0; TABLE_LEN];
        for n in 1..TABLE_LEN {
            t[n] = t[n - 1] * n as f64;
        }
        t
    })
}

/// `n!` as a double; exact for `n <= 22`, infinite beyond 170.
pub fn factorial(n: u32) -> f64 {
    table().get(n as usize).copied().unwrap_or(f64::INFINITY)
}

/// `ln(n!)`.
pub fn ln_factorial(n: u32) -> f64 {
    match table().get(n as usize) {
        Some(f) => f.ln(),
        None => table()[TABLE_LEN - 1].ln() + (TABLE_LEN as u32..=n).map(|k| (k as f64).ln()).sum::<f64>(),
    }
}
