//! The acceptance suite behind `hjcrit verify`.

use anyhow::{Context, Result};
use hjcrit_core::acceptance::{run_criterion, CriterionReport, CRITERIA};
use rayon::prelude::*;

/// Criteria cheap enough for `--fast`.
pub const FAST: [u8; 4] = [1, 2, 3, 4];

/// Upper bound on worker threads, from `HJCRIT_THREADS` when set.
pub fn thread_cap() -> Result<Option<usize>> {
    match std::env::var("HJCRIT_THREADS") {
        Ok(s) => {
            let n: usize = s
                .trim()
                .parse()
                .with_context(|| format!("HJCRIT_THREADS must be a positive integer, got `{s}`"))?;
            anyhow::ensure!(n > 0, "HJCRIT_THREADS must be a positive integer, got 0");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

/// Runs the selected criteria concurrently; reports come back in id order.
pub fn run_verify(fast: bool) -> Result<Vec<CriterionReport>> {
    let ids: Vec<u8> = if fast {
        FAST.to_vec()
    } else {
        CRITERIA.iter().map(|(id, _)| *id).collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building thread pool")?;
    Ok(pool.install(|| ids.par_iter().map(|&id| run_criterion(id)).collect()))
}

pub fn format_table(reports: &[CriterionReport]) -> String {
    let mut out = format!("{:>3}  {:<6} {:<30} {:>9}  {}\n", "id", "result", "criterion", "seconds", "detail");
    for r in reports {
        out.push_str(&format!(
            "{:>3}  {:<6} {:<30} {:>9.2}  {}\n",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.elapsed.as_secs_f64(),
            r.detail
        ));
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    out.push_str(&format!("{} of {} criteria passed\n", reports.len() - failed, reports.len()));
    out
}

pub fn print_table(reports: &[CriterionReport]) {
    print!("{}", format_table(reports));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes_and_tabulates() {
        let reports = run_verify(true).unwrap();
        assert_eq!(reports.iter().map(|r| r.id).collect::<Vec<_>>(), FAST);
        let table = format_table(&reports);
        assert_eq!(table.lines().count(), FAST.len() + 2);
        assert!(table.ends_with("4 of 4 criteria passed\n"), "{table}");
    }
}
