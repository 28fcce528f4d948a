//! Summary statistics over sweep outputs: seed-averaged depth, worst-case
//! depth, normalized-iteration means, and the power-law fit of trainability
//! against ansatz parameter count.

use serde::Serialize;
use std::path::Path;

/// One row of a sweep summary CSV.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub sites: usize,
    pub seed: u64,
    pub delta: f64,
    /// Converged depth; `None` when the sweep hit d_max without converging.
    pub d_star: Option<usize>,
    pub nit: usize,
    pub nit_normalized: f64,
    pub degenerate: bool,
    /// Parameter count of the winning ansatz at d_star.
    pub params_len: usize,
}

impl SweepRow {
    pub fn csv_header() -> &'static str {
        "sites,seed,delta,d_star,nit,nit_normalized,degenerate,params_len"
    }

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.sites,
            self.seed,
            self.delta,
            self.d_star.map_or(String::from(""), |d| d.to_string()),
            self.nit,
            self.nit_normalized,
            self.degenerate,
            self.params_len
        )
    }

    pub fn from_csv(line: &str) -> Option<SweepRow> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return None;
        }
        Some(SweepRow {
            sites: f[0].parse().ok()?,
            seed: f[1].parse().ok()?,
            delta: f[2].parse().ok()?,
            d_star: if f[3].is_empty() {
                None
            } else {
                Some(f[3].parse().ok()?)
            },
            nit: f[4].parse().ok()?,
            nit_normalized: f[5].parse().ok()?,
            degenerate: f[6].parse().ok()?,
            params_len: f[7].parse().ok()?,
        })
    }
}

/// Group statistics for one `(sites, delta)` ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct GroupSummary {
    pub sites: usize,
    pub delta: f64,
    pub n_used: usize,
    pub n_degenerate: usize,
    pub n_unconverged: usize,
    pub mean_d: f64,
    pub sem_d: f64,
    pub max_d: usize,
    pub mean_nit_normalized: f64,
    pub mean_params_len: f64,
}

/// Mean and standard error of the mean.
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares fit of `y = c x^p` on log-log axes; returns `(p, c)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys.iter())
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let cov = pairs
        .iter()
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>();
    let var = pairs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum::<f64>();
    let slope = cov / var;
    let intercept = my - slope * mx;
    (slope, intercept.exp())
}

/// Aggregate tables computed from sweep rows: per-group statistics plus the
/// trainability power-law fit over `(mean params_len, mean nit_normalized)`
/// pairs. Degenerate seeds are excluded and counted.
#[derive(Clone, Debug, Serialize)]
pub struct AggregateTables {
    pub groups: Vec<GroupSummary>,
    pub fit_exponent: Option<f64>,
    pub fit_prefactor: Option<f64>,
}

pub fn aggregate_rows(rows: &[SweepRow]) -> AggregateTables {
    let mut keys: Vec<(usize, u64)> = rows
        .iter()
        .map(|r| (r.sites, r.delta.to_bits()))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let mut groups = Vec::new();
    for (sites, delta_bits) in keys {
        let delta = f64::from_bits(delta_bits);
        let members: Vec<&SweepRow> = rows
            .iter()
            .filter(|r| r.sites == sites && r.delta.to_bits() == delta_bits)
            .collect();
        let n_degenerate = members.iter().filter(|r| r.degenerate).count();
        let usable: Vec<&&SweepRow> = members
            .iter()
            .filter(|r| !r.degenerate && r.d_star.is_some())
            .collect();
        let n_unconverged = members
            .iter()
            .filter(|r| !r.degenerate && r.d_star.is_none())
            .count();
        let depths: Vec<f64> = usable
            .iter()
            .map(|r| r.d_star.unwrap() as f64)
            .collect();
        let (mean_d, sem_d) = mean_sem(&depths);
        let (mean_nit, _) = mean_sem(
            &usable
                .iter()
                .map(|r| r.nit_normalized)
                .collect::<Vec<_>>(),
        );
        let (mean_params, _) = mean_sem(
            &usable
                .iter()
                .map(|r| r.params_len as f64)
                .collect::<Vec<_>>(),
        );
        groups.push(GroupSummary {
            sites,
            delta,
            n_used: usable.len(),
            n_degenerate,
            n_unconverged,
            mean_d,
            sem_d,
            max_d: usable
                .iter()
                .map(|r| r.d_star.unwrap())
                .max()
                .unwrap_or(0),
            mean_nit_normalized: mean_nit,
            mean_params_len: mean_params,
        });
    }
    let xs: Vec<f64> = groups
        .iter()
        .filter(|g| g.n_used > 0)
        .map(|g| g.mean_params_len)
        .collect();
    let ys: Vec<f64> = groups
        .iter()
        .filter(|g| g.n_used > 0)
        .map(|g| g.mean_nit_normalized)
        .collect();
    let (fit_exponent, fit_prefactor) = if xs.len() >= 2 {
        let (p, c) = fit_power_law(&xs, &ys);
        (Some(p), Some(c))
    } else {
        (None, None)
    };
    AggregateTables {
        groups,
        fit_exponent,
        fit_prefactor,
    }
}

/// Read a sweep `summary.csv` and aggregate it.
pub fn aggregate_dir(dir: &Path) -> anyhow::Result<AggregateTables> {
    let text = std::fs::read_to_string(dir.join("summary.csv"))?;
    let rows: Vec<SweepRow> = text
        .lines()
        .skip(1)
        .filter_map(SweepRow::from_csv)
        .collect();
    if rows.is_empty() {
        anyhow::bail!("no usable rows in {}", dir.display());
    }
    Ok(aggregate_rows(&rows))
}

pub fn tables_csv(tables: &AggregateTables) -> String {
    let mut out = String::from(
        "sites,delta,n_used,n_degenerate,n_unconverged,mean_d,sem_d,max_d,mean_nit_normalized,mean_params_len\n",
    );
    for g in &tables.groups {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            g.sites,
            g.delta,
            g.n_used,
            g.n_degenerate,
            g.n_unconverged,
            g.mean_d,
            g.sem_d,
            g.max_d,
            g.mean_nit_normalized,
            g.mean_params_len
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sem_small_sample() {
        let (mean, sem) = mean_sem(&[2.0, 4.0]);
        assert!((mean - 3.0).abs() < 1e-12);
        assert!((sem - 1.0).abs() < 1e-12);
    }

    #[test]
    fn power_law_recovery() {
        let xs: Vec<f64> = (1..40).map(|k| k as f64 * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.powf(1.769)).collect();
        let (p, c) = fit_power_law(&xs, &ys);
        assert!((p - 1.769).abs() < 0.01, "exponent {p}");
        assert!((c - 1.0).abs() < 0.05, "prefactor {c}");
    }

    #[test]
    fn degenerate_rows_excluded_and_counted() {
        let rows = vec![
            SweepRow {
                sites: 2,
                seed: 0,
                delta: 1e-3,
                d_star: Some(2),
                nit: 100,
                nit_normalized: 5.0,
                degenerate: false,
                params_len: 16,
            },
            SweepRow {
                sites: 2,
                seed: 1,
                delta: 1e-3,
                d_star: Some(4),
                nit: 300,
                nit_normalized: 15.0,
                degenerate: false,
                params_len: 32,
            },
            SweepRow {
                sites: 2,
                seed: 2,
                delta: 1e-3,
                d_star: Some(1),
                nit: 1,
                nit_normalized: 0.1,
                degenerate: true,
                params_len: 8,
            },
        ];
        let tables = aggregate_rows(&rows);
        assert_eq!(tables.groups.len(), 1);
        let g = &tables.groups[0];
        assert_eq!(g.n_used, 2);
        assert_eq!(g.n_degenerate, 1);
        assert!((g.mean_d - 3.0).abs() < 1e-12);
        assert!((g.sem_d - 1.0).abs() < 1e-12);
        assert_eq!(g.max_d, 4);
    }

    #[test]
    fn all_degenerate_flags_zero_usable() {
        let rows = vec![SweepRow {
            sites: 2,
            seed: 0,
            delta: 1e-2,
            d_star: Some(1),
            nit: 10,
            nit_normalized: 0.5,
            degenerate: true,
            params_len: 8,
        }];
        let tables = aggregate_rows(&rows);
        assert_eq!(tables.groups[0].n_used, 0);
        assert_eq!(tables.groups[0].n_degenerate, 1);
    }

    #[test]
    fn csv_row_round_trip() {
        let row = SweepRow {
            sites: 3,
            seed: 17,
            delta: 1e-4,
            d_star: None,
            nit: 4242,
            nit_normalized: 132.5625,
            degenerate: false,
            params_len: 0,
        };
        let back = SweepRow::from_csv(&row.to_csv()).unwrap();
        assert_eq!(back.seed, 17);
        assert_eq!(back.d_star, None);
        assert_eq!(back.nit, 4242);
    }
}
