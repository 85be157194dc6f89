//! Per-access cache energy, average memory access time, and the downsizing
//! decision rule, evaluated over hit/miss counts from the simulator.
//!
//! Miss costs are not parameterized separately: per-size tables carry hit
//! energy and hit latency, and miss energy / miss penalty are derived as
//! `k_factor` times the hit values (default 100, cited hardware range
//! 50-200).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::cache::AccessStats;

pub const DEFAULT_K_FACTOR: f64 = 100.0;
pub const K_FACTOR_CITED_RANGE: (f64, f64) = (50.0, 200.0);

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("no energy parameters for cache size {0} bytes")]
    UnknownSize(u64),
    #[error("invalid energy parameters: {0}")]
    InvalidParams(String),
    #[error("reference energy is zero; reduction undefined")]
    ZeroReferenceEnergy,
    #[error("size lists differ between baseline and extended sweeps")]
    SizeListMismatch,
}

/// How AMAT combines the two latency terms.
///
/// `Weighted` weights both terms by their rates
/// (hit_rate x hit_delay + miss_rate x miss_penalty); `Textbook` charges the
/// hit latency on every access (hit_delay + miss_rate x miss_penalty).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AmatConvention {
    #[default]
    Weighted,
    Textbook,
}

impl fmt::Display for AmatConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmatConvention::Weighted => "weighted",
            AmatConvention::Textbook => "textbook",
        })
    }
}

impl FromStr for AmatConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "weighted" => Ok(AmatConvention::Weighted),
            "textbook" => Ok(AmatConvention::Textbook),
            other => Err(format!("unknown amat convention `{other}`")),
        }
    }
}

/// Per-hit cost of one capacity point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizePoint {
    pub hit_energy_nj: f64,
    pub hit_delay_ns: f64,
}

/// Per-size hit cost table plus the hit-to-miss scale factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyParams {
    pub per_size: BTreeMap<u64, SizePoint>,
    pub k_factor: f64,
    pub amat_convention: AmatConvention,
}

impl EnergyParams {
    /// Built-in 45 nm table (CACTI-derived) for 1 KB through 32 KB.
    pub fn builtin_45nm() -> Self {
        let table = [
            (1 << 10, 0.00516, 0.295112),
            (2 << 10, 0.005368, 0.295543),
            (4 << 10, 0.008101, 0.33874),
            (8 << 10, 0.008965, 0.347022),
            (16 << 10, 0.012822, 0.366523),
            (32 << 10, 0.019736, 0.406605),
        ];
        EnergyParams {
            per_size: table
                .into_iter()
                .map(|(size, hit_energy_nj, hit_delay_ns)| {
                    (
                        size,
                        SizePoint {
                            hit_energy_nj,
                            hit_delay_ns,
                        },
                    )
                })
                .collect(),
            k_factor: DEFAULT_K_FACTOR,
            amat_convention: AmatConvention::Weighted,
        }
    }

    pub fn point(&self, size: u64) -> Result<SizePoint, EnergyError> {
        self.per_size
            .get(&size)
            .copied()
            .ok_or(EnergyError::UnknownSize(size))
    }

    pub fn miss_energy_nj(&self, size: u64) -> Result<f64, EnergyError> {
        Ok(self.k_factor * self.point(size)?.hit_energy_nj)
    }

    pub fn miss_penalty_ns(&self, size: u64) -> Result<f64, EnergyError> {
        Ok(self.k_factor * self.point(size)?.hit_delay_ns)
    }

    pub fn validate(&self) -> Result<(), EnergyError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.k_factor) {
            return Err(EnergyError::InvalidParams(format!(
                "k_factor {} must be positive",
                self.k_factor
            )));
        }
        if self.per_size.is_empty() {
            return Err(EnergyError::InvalidParams(
                "at least one size entry required".into(),
            ));
        }
        for (size, point) in &self.per_size {
            if !positive(point.hit_energy_nj) || !positive(point.hit_delay_ns) {
                return Err(EnergyError::InvalidParams(format!(
                    "non-positive parameters for size {size}"
                )));
            }
        }
        Ok(())
    }

    /// Out-of-range k factors are allowed but worth flagging.
    pub fn k_factor_warning(&self) -> Option<String> {
        let (lo, hi) = K_FACTOR_CITED_RANGE;
        if self.k_factor < lo || self.k_factor > hi {
            Some(format!(
                "k_factor {} is outside the cited hardware range {lo}-{hi}",
                self.k_factor
            ))
        } else {
            None
        }
    }

    /// Text form: `size=<cap> hit_energy_nj=<v> hit_delay_ns=<v>` lines plus
    /// an optional `k_factor=<v>` line. Sizes accept K/M suffixes.
    pub fn parse(text: &str) -> Result<Self, EnergyError> {
        let mut per_size = BTreeMap::new();
        let mut k_factor = DEFAULT_K_FACTOR;
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() || content == "format v1" {
                continue;
            }
            if let Some(value) = content.strip_prefix("k_factor=") {
                k_factor = value.trim().parse().map_err(|_| EnergyError::Parse {
                    line,
                    message: format!("invalid k_factor `{value}`"),
                })?;
                continue;
            }
            let mut size = None;
            let mut hit_energy = None;
            let mut hit_delay = None;
            for token in content.split_whitespace() {
                let (key, value) = token.split_once('=').ok_or_else(|| EnergyError::Parse {
                    line,
                    message: format!("expected key=value, got `{token}`"),
                })?;
                match key {
                    "size" => {
                        size = Some(parse_size(value).map_err(|e| EnergyError::Parse {
                            line,
                            message: e,
                        })?)
                    }
                    "hit_energy_nj" => {
                        hit_energy =
                            Some(value.parse::<f64>().map_err(|_| EnergyError::Parse {
                                line,
                                message: format!("invalid hit_energy_nj `{value}`"),
                            })?)
                    }
                    "hit_delay_ns" => {
                        hit_delay = Some(value.parse::<f64>().map_err(|_| EnergyError::Parse {
                            line,
                            message: format!("invalid hit_delay_ns `{value}`"),
                        })?)
                    }
                    other => {
                        return Err(EnergyError::Parse {
                            line,
                            message: format!("unknown key `{other}`"),
                        })
                    }
                }
            }
            match (size, hit_energy, hit_delay) {
                (Some(size), Some(hit_energy_nj), Some(hit_delay_ns)) => {
                    per_size.insert(
                        size,
                        SizePoint {
                            hit_energy_nj,
                            hit_delay_ns,
                        },
                    );
                }
                _ => {
                    return Err(EnergyError::Parse {
                        line,
                        message: "size entry needs size=, hit_energy_nj= and hit_delay_ns="
                            .into(),
                    })
                }
            }
        }
        let params = EnergyParams {
            per_size,
            k_factor,
            amat_convention: AmatConvention::Weighted,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self, EnergyError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Parses a byte size with an optional K/M suffix ("32K", "1M", "4096").
pub fn parse_size(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let (digits, multiplier) = match s.char_indices().last() {
        Some((i, 'k' | 'K')) => (&s[..i], 1024),
        Some((i, 'm' | 'M')) => (&s[..i], 1024 * 1024),
        _ => (s, 1),
    };
    digits
        .parse::<u64>()
        .map(|v| v * multiplier)
        .map_err(|_| format!("invalid size `{s}`"))
}

/// Energy and access time of one replay at one capacity. Zero-total stats
/// define both as zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyResult {
    pub size: u64,
    pub hits: u64,
    pub misses: u64,
    pub total_energy_nj: f64,
    pub amat_ns: f64,
}

/// total_energy = hits x hit_energy + misses x (k x hit_energy);
/// amat per the configured convention.
pub fn energy(
    stats: &AccessStats,
    size: u64,
    params: &EnergyParams,
) -> Result<EnergyResult, EnergyError> {
    let point = params.point(size)?;
    let (total_energy_nj, amat_ns) = if stats.total() == 0 {
        (0.0, 0.0)
    } else {
        let miss_energy = params.k_factor * point.hit_energy_nj;
        let miss_penalty = params.k_factor * point.hit_delay_ns;
        let energy =
            stats.hits as f64 * point.hit_energy_nj + stats.misses as f64 * miss_energy;
        let amat = match params.amat_convention {
            AmatConvention::Weighted => {
                stats.hit_rate() * point.hit_delay_ns + stats.miss_rate() * miss_penalty
            }
            AmatConvention::Textbook => point.hit_delay_ns + stats.miss_rate() * miss_penalty,
        };
        (energy, amat)
    };
    Ok(EnergyResult {
        size,
        hits: stats.hits,
        misses: stats.misses,
        total_energy_nj,
        amat_ns,
    })
}

/// The downsizing decision for one (baseline, candidate) size pair.
/// `dyn_energy_reduction_pct` is filled by the sweep report when accepted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SizingVerdict {
    pub baseline_size: u64,
    pub candidate_size: u64,
    pub amat_baseline_no_ci: f64,
    pub amat_candidate_with_ci: f64,
    pub accepted: bool,
    pub dyn_energy_reduction_pct: Option<f64>,
}

/// Accepts the smaller cache exactly when the with-CI access time at the
/// candidate size does not exceed the no-CI access time at the baseline
/// size; ties accept.
pub fn downsize_decision(
    amat_no_ci_at_baseline: f64,
    amat_with_ci_at_candidate: f64,
    sizes: (u64, u64),
) -> SizingVerdict {
    SizingVerdict {
        baseline_size: sizes.0,
        candidate_size: sizes.1,
        amat_baseline_no_ci: amat_no_ci_at_baseline,
        amat_candidate_with_ci: amat_with_ci_at_candidate,
        accepted: amat_with_ci_at_candidate <= amat_no_ci_at_baseline,
        dyn_energy_reduction_pct: None,
    }
}

/// 100 x (1 - E_small / E_large); negative when the small cache misses so
/// much that it costs more.
pub fn dyn_energy_reduction(
    result_small: &EnergyResult,
    result_large: &EnergyResult,
) -> Result<f64, EnergyError> {
    if result_large.total_energy_nj == 0.0 {
        return Err(EnergyError::ZeroReferenceEnergy);
    }
    Ok(100.0 * (1.0 - result_small.total_energy_nj / result_large.total_energy_nj))
}

/// One sweep size with both variants and the same-size energy saving.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SizeRow {
    pub size: u64,
    pub baseline: EnergyResult,
    pub extended: EnergyResult,
    pub energy_saving_pct: f64,
}

/// Full energy/AMAT sweep: per-size rows plus one verdict per
/// (baseline, smaller candidate) pair.
#[derive(Clone, Debug, Default, Serialize)]
pub struct SizingReport {
    pub rows: Vec<SizeRow>,
    pub verdicts: Vec<SizingVerdict>,
}

pub fn sweep_report(
    baseline: &BTreeMap<u64, AccessStats>,
    extended: &BTreeMap<u64, AccessStats>,
    params: &EnergyParams,
) -> Result<SizingReport, EnergyError> {
    if baseline.len() != extended.len()
        || baseline.keys().zip(extended.keys()).any(|(a, b)| a != b)
    {
        return Err(EnergyError::SizeListMismatch);
    }
    let mut rows = Vec::with_capacity(baseline.len());
    for (&size, base_stats) in baseline {
        let base = energy(base_stats, size, params)?;
        let ext = energy(&extended[&size], size, params)?;
        let energy_saving_pct = if base.total_energy_nj == 0.0 {
            0.0
        } else {
            100.0 * (1.0 - ext.total_energy_nj / base.total_energy_nj)
        };
        rows.push(SizeRow {
            size,
            baseline: base,
            extended: ext,
            energy_saving_pct,
        });
    }
    let mut verdicts = Vec::new();
    for (bi, baseline_row) in rows.iter().enumerate() {
        for candidate_row in &rows[..bi] {
            let mut verdict = downsize_decision(
                baseline_row.baseline.amat_ns,
                candidate_row.extended.amat_ns,
                (baseline_row.size, candidate_row.size),
            );
            if verdict.accepted && baseline_row.extended.total_energy_nj > 0.0 {
                verdict.dyn_energy_reduction_pct = Some(dyn_energy_reduction(
                    &candidate_row.extended,
                    &baseline_row.extended,
                )?);
            }
            verdicts.push(verdict);
        }
    }
    Ok(SizingReport { rows, verdicts })
}
