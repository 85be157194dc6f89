//! Reference models and random-input builders shared by the integration
//! suites. Both oracles re-derive behaviour from first principles and share
//! no code with the implementation paths they check.

#![allow(dead_code)] // each test binary uses a subset

use icx::cache::{AccessStats, CacheConfig, Replacement};
use icx::ci::{CiCandidate, CiConstraints};
use icx::program::{DynamicTrace, InstructionRecord, OpcodeClass, StaticProgram};
use rand::Rng;

/// Naive cache: per-set recency lists, front = newest. LRU moves hits to the
/// front; FIFO leaves order untouched; both evict from the back.
pub struct RefCache {
    sets: Vec<Vec<u64>>,
    num_sets: u64,
    ways: usize,
    block_size: u64,
    replacement: Replacement,
}

impl RefCache {
    pub fn new(config: &CacheConfig) -> Self {
        RefCache {
            sets: (0..config.num_sets()).map(|_| Vec::new()).collect(),
            num_sets: config.num_sets(),
            ways: config.ways() as usize,
            block_size: config.block_size,
            replacement: config.replacement,
        }
    }

    pub fn access(&mut self, addr: u64) -> bool {
        let block = addr / self.block_size;
        let set = (block % self.num_sets) as usize;
        let tag = block / self.num_sets;
        let lines = &mut self.sets[set];
        if let Some(pos) = lines.iter().position(|&t| t == tag) {
            if self.replacement == Replacement::Lru {
                let tag = lines.remove(pos);
                lines.insert(0, tag);
            }
            true
        } else {
            lines.insert(0, tag);
            if lines.len() > self.ways {
                lines.pop();
            }
            false
        }
    }
}

pub fn ref_simulate(
    program: &StaticProgram,
    trace: &DynamicTrace,
    config: &CacheConfig,
) -> AccessStats {
    let mut cache = RefCache::new(config);
    let mut stats = AccessStats::default();
    for index in trace.events() {
        if cache.access(program.address(index)) {
            stats.hits += 1;
        } else {
            stats.misses += 1;
        }
    }
    stats
}

/// Brute-force candidate enumeration: occurrences are found by literal
/// subsequence matching over the expanded event list, and I/O counts come
/// from nested scans rather than running sets.
pub fn oracle_enumerate(
    program: &StaticProgram,
    trace: &DynamicTrace,
    constraints: &CiConstraints,
) -> Vec<CiCandidate> {
    let events: Vec<u32> = trace.events().collect();
    let records = program.records();
    let n = records.len();
    let mut out = Vec::new();
    for start in 0..n {
        for len in 2..=constraints.max_len.min(n - start) {
            let window: Vec<u32> = (start as u32..(start + len) as u32).collect();
            let forbidden = records[start..start + len].iter().any(|r| {
                r.opcode_class == OpcodeClass::Custom
                    || constraints.forbid_classes.contains(&r.opcode_class)
            });
            if forbidden {
                continue;
            }
            let occurrence_starts: Vec<usize> = (0..events.len().saturating_sub(len - 1))
                .filter(|&p| events[p..p + len] == window[..])
                .collect();
            if occurrence_starts.is_empty() {
                continue;
            }
            let every_appearance_covered = events.iter().enumerate().all(|(q, &e)| {
                if e < window[0] || e > window[len - 1] {
                    return true;
                }
                let offset = (e - window[0]) as usize;
                q >= offset && occurrence_starts.contains(&(q - offset))
            });
            if !every_appearance_covered {
                continue;
            }
            let (inputs, outputs) = oracle_window_io(records, start, len);
            if inputs > constraints.max_inputs || outputs > constraints.max_outputs {
                continue;
            }
            let execs = occurrence_starts.len() as u64;
            out.push(CiCandidate {
                start_index: start as u32,
                length: len as u32,
                ext_inputs: inputs as u32,
                ext_outputs: outputs as u32,
                exec_count: execs,
                merit: execs * (len as u64 - 1),
            });
        }
    }
    out.sort_by_key(|c| (c.start_index, c.length));
    out
}

fn oracle_window_io(records: &[InstructionRecord], start: usize, len: usize) -> (usize, usize) {
    let mut external_reads: Vec<u8> = Vec::new();
    for i in start..start + len {
        for &src in &records[i].srcs {
            let written_earlier = records[start..i].iter().any(|r| r.dst == Some(src));
            if !written_earlier && !external_reads.contains(&src) {
                external_reads.push(src);
            }
        }
    }
    let mut live_outs: Vec<u8> = Vec::new();
    for i in start..start + len {
        if let Some(reg) = records[i].dst {
            if live_outs.contains(&reg) {
                continue;
            }
            for later in &records[start + len..] {
                if later.srcs.contains(&reg) {
                    live_outs.push(reg);
                    break;
                }
                if later.dst == Some(reg) {
                    break;
                }
            }
        }
    }
    (external_reads.len(), live_outs.len())
}

/// Random program over the base classes with plausible operand shapes.
pub fn random_program<R: Rng>(rng: &mut R, len: usize) -> StaticProgram {
    let records = (0..len)
        .map(|i| {
            let opcode_class = match rng.random_range(0..10) {
                0 => OpcodeClass::Load,
                1 => OpcodeClass::Store,
                2 => OpcodeClass::Branch,
                _ => OpcodeClass::Arithmetic,
            };
            let dst = if matches!(opcode_class, OpcodeClass::Store | OpcodeClass::Branch) {
                None
            } else {
                Some(rng.random_range(0..32) as u8)
            };
            let n_srcs = rng.random_range(0..=2);
            let srcs = (0..n_srcs)
                .map(|_| rng.random_range(0..32) as u8)
                .collect();
            InstructionRecord {
                index: i as u32,
                opcode_class,
                ci_id: None,
                dst,
                srcs,
            }
        })
        .collect();
    StaticProgram::new(records, 4).expect("random program is valid")
}

/// Random trace built from short ascending bursts, so contiguous windows do
/// recur.
pub fn random_loopish_trace<R: Rng>(
    rng: &mut R,
    program_len: usize,
    target_events: usize,
) -> DynamicTrace {
    let mut events = Vec::with_capacity(target_events);
    while events.len() < target_events {
        let start = rng.random_range(0..program_len as u32);
        let longest = (program_len as u32 - start).min(6);
        let burst = rng.random_range(1..=longest);
        let repeats = rng.random_range(1..=3);
        for _ in 0..repeats {
            events.extend(start..start + burst);
        }
    }
    DynamicTrace::from_events(&events)
}

pub fn random_uniform_trace<R: Rng>(
    rng: &mut R,
    program_len: usize,
    events: usize,
) -> DynamicTrace {
    let events: Vec<u32> = (0..events)
        .map(|_| rng.random_range(0..program_len as u32))
        .collect();
    DynamicTrace::from_events(&events)
}
