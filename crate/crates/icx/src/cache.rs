//! Trace-driven instruction-cache replay with exact hit/miss accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::program::{DynamicTrace, StaticProgram};

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("invalid cache config: {0}")]
    InvalidConfig(String),
    #[error("trace index {index} out of range for a program of {len} instructions")]
    IndexOutOfRange { index: u32, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    Lru,
    Fifo,
}

impl fmt::Display for Replacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Replacement::Lru => "lru",
            Replacement::Fifo => "fifo",
        })
    }
}

impl FromStr for Replacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lru" => Ok(Replacement::Lru),
            "fifo" => Ok(Replacement::Fifo),
            other => Err(format!("unknown replacement policy `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Associativity {
    Ways(u32),
    Full,
}

impl fmt::Display for Associativity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Associativity::Ways(w) => write!(f, "{w}"),
            Associativity::Full => f.write_str("full"),
        }
    }
}

impl FromStr for Associativity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(Associativity::Full);
        }
        s.parse::<u32>()
            .map(Associativity::Ways)
            .map_err(|_| format!("invalid associativity `{s}` (expected a way count or `full`)"))
    }
}

/// Cache geometry. All reports carry the full geometry so no count is ever
/// published without it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CacheConfig {
    pub capacity: u64,
    pub block_size: u64,
    pub associativity: Associativity,
    pub replacement: Replacement,
    pub instruction_width: u32,
}

impl CacheConfig {
    pub fn validate(&self) -> Result<(), CacheError> {
        let fail = |msg: String| Err(CacheError::InvalidConfig(msg));
        if self.capacity == 0 || !self.capacity.is_power_of_two() {
            return fail(format!("capacity {} is not a power of two", self.capacity));
        }
        if self.block_size == 0 || !self.block_size.is_power_of_two() {
            return fail(format!(
                "block size {} is not a power of two",
                self.block_size
            ));
        }
        if self.block_size > self.capacity {
            return fail(format!(
                "block size {} exceeds capacity {}",
                self.block_size, self.capacity
            ));
        }
        if self.instruction_width == 0 {
            return fail("instruction width must be positive".into());
        }
        if self.block_size % u64::from(self.instruction_width) != 0 {
            return fail(format!(
                "block size {} is not a multiple of instruction width {}",
                self.block_size, self.instruction_width
            ));
        }
        if let Associativity::Ways(w) = self.associativity {
            if w == 0 || !w.is_power_of_two() {
                return fail(format!("associativity {w} is not a power of two"));
            }
            if self.capacity % (self.block_size * u64::from(w)) != 0 {
                return fail(format!(
                    "capacity {} is not a multiple of block size {} x {w} ways",
                    self.capacity, self.block_size
                ));
            }
        }
        Ok(())
    }

    pub fn ways(&self) -> u64 {
        match self.associativity {
            Associativity::Ways(w) => u64::from(w),
            Associativity::Full => self.capacity / self.block_size,
        }
    }

    pub fn num_sets(&self) -> u64 {
        self.capacity / self.block_size / self.ways()
    }

    /// Instructions per block (`B`).
    pub fn block_capacity(&self) -> u64 {
        self.block_size / u64::from(self.instruction_width)
    }

    pub fn with_capacity(mut self, capacity: u64) -> Self {
        self.capacity = capacity;
        self
    }
}

impl Default for CacheConfig {
    fn default() -> Self {
        CacheConfig {
            capacity: 1024,
            block_size: 32,
            associativity: Associativity::Ways(2),
            replacement: Replacement::Lru,
            instruction_width: 4,
        }
    }
}

/// Exact access counts for one replay. `total` is always hits + misses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AccessStats {
    pub hits: u64,
    pub misses: u64,
}

impl AccessStats {
    pub fn total(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn hit_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.hits as f64 / self.total() as f64
        }
    }

    pub fn miss_rate(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.misses as f64 / self.total() as f64
        }
    }
}

struct Line {
    tag: u64,
    // last-use tick under LRU, fill tick under FIFO
    stamp: u64,
}

/// Mutable cache state for one replay. On a miss the whole containing block
/// is installed; instruction fetches never dirty a line.
pub struct CacheSim {
    num_sets: u64,
    ways: u64,
    block_size: u64,
    replacement: Replacement,
    sets: Vec<Vec<Line>>,
    tick: u64,
}

impl CacheSim {
    pub fn new(config: &CacheConfig) -> Result<Self, CacheError> {
        config.validate()?;
        let num_sets = config.num_sets();
        Ok(CacheSim {
            num_sets,
            ways: config.ways(),
            block_size: config.block_size,
            replacement: config.replacement,
            sets: (0..num_sets).map(|_| Vec::new()).collect(),
            tick: 0,
        })
    }

    /// Returns true on a hit.
    pub fn access(&mut self, addr: u64) -> bool {
        self.tick += 1;
        let block = addr / self.block_size;
        let set = (block % self.num_sets) as usize;
        let tag = block / self.num_sets;
        let lines = &mut self.sets[set];
        if let Some(line) = lines.iter_mut().find(|l| l.tag == tag) {
            if self.replacement == Replacement::Lru {
                line.stamp = self.tick;
            }
            return true;
        }
        let filled = Line {
            tag,
            stamp: self.tick,
        };
        if (lines.len() as u64) < self.ways {
            lines.push(filled);
        } else {
            let victim = lines
                .iter_mut()
                .min_by_key(|l| l.stamp)
                .expect("sets are non-empty once full");
            *victim = filled;
        }
        false
    }
}

/// Replays the fetch stream through one cache configuration.
pub fn simulate(
    program: &StaticProgram,
    trace: &DynamicTrace,
    config: &CacheConfig,
) -> Result<AccessStats, CacheError> {
    if config.instruction_width != program.instruction_width() {
        return Err(CacheError::InvalidConfig(format!(
            "config width {} differs from program width {}",
            config.instruction_width,
            program.instruction_width()
        )));
    }
    if let Some(max) = trace.max_index() {
        if max as usize >= program.len() {
            return Err(CacheError::IndexOutOfRange {
                index: max,
                len: program.len(),
            });
        }
    }
    let mut sim = CacheSim::new(config)?;
    let mut stats = AccessStats::default();
    for index in trace.events() {
        if sim.access(program.address(index)) {
            stats.hits += 1;
        } else {
            stats.misses += 1;
        }
    }
    Ok(stats)
}

/// Independent replays at each capacity, keyed by capacity.
pub fn simulate_sweep(
    program: &StaticProgram,
    trace: &DynamicTrace,
    sizes: &[u64],
    template: &CacheConfig,
) -> Result<BTreeMap<u64, AccessStats>, CacheError> {
    let mut results = BTreeMap::new();
    for &size in sizes {
        let config = template.with_capacity(size);
        results.insert(size, simulate(program, trace, &config)?);
    }
    Ok(results)
}

pub const STATS_CSV_HEADER: &str = "size,ways,block,replacement,hits,misses,total";

pub fn stats_csv_row(config: &CacheConfig, stats: &AccessStats) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        config.capacity,
        config.associativity,
        config.block_size,
        config.replacement,
        stats.hits,
        stats.misses,
        stats.total()
    )
}
