//! Custom-instruction candidates: enumeration of hot contiguous sequences
//! under register I/O constraints, greedy non-overlapping selection, and the
//! program/trace rewrite that models the extended ISA.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::cache::AccessStats;
use crate::program::{
    DynamicTrace, InstructionRecord, OpcodeClass, ProgramError, StaticProgram,
};

#[derive(Debug, Error)]
pub enum CiError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid constraints: {0}")]
    Constraints(String),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("ci{ci} has a partial dynamic occurrence at trace position {trace_pos}")]
    PartialOccurrence { ci: u32, trace_pos: u64 },
    #[error("rewrite: {0}")]
    Rewrite(#[from] ProgramError),
}

/// Legality bounds for candidate enumeration. Memory and control classes are
/// kept outside custom instructions by default.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CiConstraints {
    pub max_len: usize,
    pub max_inputs: usize,
    pub max_outputs: usize,
    pub forbid_classes: Vec<OpcodeClass>,
}

impl CiConstraints {
    /// Defaults: two register inputs, one output, forbidden memory/control
    /// classes, and sequences no longer than one cache block.
    pub fn for_block_capacity(block_capacity: usize) -> Self {
        CiConstraints {
            max_len: block_capacity,
            max_inputs: 2,
            max_outputs: 1,
            forbid_classes: vec![OpcodeClass::Load, OpcodeClass::Store, OpcodeClass::Branch],
        }
    }

    fn forbids(&self, class: OpcodeClass) -> bool {
        // a custom instruction never nests another one
        class == OpcodeClass::Custom || self.forbid_classes.contains(&class)
    }
}

/// A legal contiguous sequence `[start_index, start_index + length)` plus its
/// dataflow footprint and dynamic profile. merit = exec_count × (length − 1),
/// the number of fetches the substitution saves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CiCandidate {
    pub start_index: u32,
    pub length: u32,
    pub ext_inputs: u32,
    pub ext_outputs: u32,
    pub exec_count: u64,
    pub merit: u64,
}

impl CiCandidate {
    pub fn end_index(&self) -> u32 {
        self.start_index + self.length
    }

    pub fn overlaps(&self, other: &CiCandidate) -> bool {
        self.start_index < other.end_index() && other.start_index < self.end_index()
    }
}

/// External register traffic of a window: `inputs` in first-read order,
/// `outputs` (live past the window) in ascending register order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WindowIo {
    pub inputs: Vec<u8>,
    pub outputs: Vec<u8>,
}

/// Dataflow of the window `[start, start + len)`. A register is an external
/// input when it is read before any write to it inside the window; a written
/// register is an external output when a later instruction (in static order)
/// reads it before any other write to it.
pub fn window_io(program: &StaticProgram, start: usize, len: usize) -> WindowIo {
    let records = program.records();
    let mut written = [false; 32];
    let mut inputs = Vec::new();
    for rec in &records[start..start + len] {
        for &src in &rec.srcs {
            if !written[src as usize] && !inputs.contains(&src) {
                inputs.push(src);
            }
        }
        if let Some(dst) = rec.dst {
            written[dst as usize] = true;
        }
    }
    let mut outputs = Vec::new();
    for reg in 0..32u8 {
        if written[reg as usize] && live_after(records, start + len, reg) {
            outputs.push(reg);
        }
    }
    WindowIo { inputs, outputs }
}

fn live_after(records: &[InstructionRecord], from: usize, reg: u8) -> bool {
    for rec in &records[from..] {
        if rec.srcs.contains(&reg) {
            return true;
        }
        if rec.dst == Some(reg) {
            return false;
        }
    }
    false
}

/// A maximal ascending stretch of the fetch stream, with multiplicity.
#[derive(Clone, Copy, Debug)]
struct Segment {
    first: u32,
    last: u32,
    mult: u64,
}

/// Decomposes the trace into maximal consecutive-index segments. A window is
/// completely executed exactly when every segment touching it contains it,
/// and its exec count is the multiplicity sum of the containing segments.
fn ascending_segments(trace: &DynamicTrace) -> Vec<Segment> {
    let mut raw: Vec<(u32, u32, u64)> = Vec::new();
    let mut open: Option<(u32, u32)> = None;
    for run in trace.runs() {
        let mut count = u64::from(run.count);
        if let Some((first, last)) = open {
            if u64::from(run.first) == u64::from(last) + 1 {
                count -= 1;
                if count == 0 {
                    open = Some((first, run.last));
                    continue;
                }
                raw.push((first, run.last, 1));
            } else {
                raw.push((first, last, 1));
            }
        }
        if count > 1 {
            raw.push((run.first, run.last, count - 1));
        }
        open = Some((run.first, run.last));
    }
    if let Some((first, last)) = open {
        raw.push((first, last, 1));
    }
    let mut agg: HashMap<(u32, u32), u64> = HashMap::new();
    for (first, last, mult) in raw {
        *agg.entry((first, last)).or_insert(0) += mult;
    }
    let mut segments: Vec<Segment> = agg
        .into_iter()
        .map(|((first, last), mult)| Segment { first, last, mult })
        .collect();
    segments.sort_unstable_by_key(|s| (s.first, s.last));
    segments
}

/// Every contiguous window of length 2..=max_len whose dynamic executions are
/// all complete (and at least one exists), whose classes are allowed, and
/// whose dataflow fits the I/O bounds. Ordered by (start_index, length).
pub fn enumerate_candidates(
    program: &StaticProgram,
    trace: &DynamicTrace,
    constraints: &CiConstraints,
) -> Result<Vec<CiCandidate>, CiError> {
    if constraints.max_len < 2 {
        return Err(CiError::Constraints("max_len must be at least 2".into()));
    }
    if trace.is_empty() {
        return Err(CiError::EmptyTrace);
    }
    let n = program.len();
    let records = program.records();
    let segments = ascending_segments(trace);
    let mut candidates = Vec::new();

    for start in 0..n {
        if constraints.forbids(records[start].opcode_class) {
            continue;
        }
        let longest = constraints.max_len.min(n - start);
        for len in 2..=longest {
            if constraints.forbids(records[start + len - 1].opcode_class) {
                break;
            }
            let window_last = (start + len - 1) as u32;
            let mut execs = 0u64;
            let mut complete = true;
            for seg in &segments {
                if seg.last < start as u32 || seg.first > window_last {
                    continue;
                }
                if seg.first <= start as u32 && window_last <= seg.last {
                    execs += seg.mult;
                } else {
                    complete = false;
                    break;
                }
            }
            // extending the window cannot fix a broken or never-executed one
            if !complete || execs == 0 {
                break;
            }
            let io = window_io(program, start, len);
            if io.inputs.len() > constraints.max_inputs {
                // inputs only grow as the window extends
                break;
            }
            if io.outputs.len() > constraints.max_outputs {
                continue;
            }
            candidates.push(CiCandidate {
                start_index: start as u32,
                length: len as u32,
                ext_inputs: io.inputs.len() as u32,
                ext_outputs: io.outputs.len() as u32,
                exec_count: execs,
                merit: execs * (len as u64 - 1),
            });
        }
    }
    Ok(candidates)
}

/// One chosen custom instruction with its ISA identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SelectedCi {
    pub id: u32,
    pub candidate: CiCandidate,
}

/// A set of chosen candidates with pairwise non-overlapping static ranges,
/// kept sorted by start index.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CiSelection {
    items: Vec<SelectedCi>,
}

impl CiSelection {
    pub fn new(mut items: Vec<SelectedCi>) -> Result<Self, CiError> {
        items.sort_by_key(|s| s.candidate.start_index);
        for pair in items.windows(2) {
            if pair[0].candidate.overlaps(&pair[1].candidate) {
                return Err(CiError::InvalidSelection(format!(
                    "ci{} [{}..{}) overlaps ci{} [{}..{})",
                    pair[0].id,
                    pair[0].candidate.start_index,
                    pair[0].candidate.end_index(),
                    pair[1].id,
                    pair[1].candidate.start_index,
                    pair[1].candidate.end_index(),
                )));
            }
            if pair[0].id == pair[1].id {
                return Err(CiError::InvalidSelection(format!(
                    "duplicate ci id {}",
                    pair[0].id
                )));
            }
        }
        for item in &items {
            if item.candidate.length < 2 {
                return Err(CiError::InvalidSelection(format!(
                    "ci{} has length {} (minimum 2)",
                    item.id, item.candidate.length
                )));
            }
        }
        Ok(CiSelection { items })
    }

    pub fn empty() -> Self {
        CiSelection::default()
    }

    pub fn items(&self) -> &[SelectedCi] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    fn validate_against(&self, program: &StaticProgram) -> Result<(), CiError> {
        for item in &self.items {
            if item.candidate.end_index() as usize > program.len() {
                return Err(CiError::InvalidSelection(format!(
                    "ci{} [{}..{}) exceeds program length {}",
                    item.id,
                    item.candidate.start_index,
                    item.candidate.end_index(),
                    program.len()
                )));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CiError> {
        let mut items = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() || content == "format v1" {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 7 || tokens[0] != "ci" {
                return Err(CiError::Parse {
                    line,
                    message: "expected `ci <id> start=<k> len=<j> inputs=<n> outputs=<m> execs=<c>`"
                        .into(),
                });
            }
            let id: u32 = tokens[1].parse().map_err(|_| CiError::Parse {
                line,
                message: format!("invalid ci id `{}`", tokens[1]),
            })?;
            let field = |key: &str| -> Result<u64, CiError> {
                tokens[2..]
                    .iter()
                    .find_map(|t| t.strip_prefix(key).and_then(|t| t.strip_prefix('=')))
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| CiError::Parse {
                        line,
                        message: format!("missing or invalid `{key}=`"),
                    })
            };
            let start = field("start")?;
            let len = field("len")?;
            let inputs = field("inputs")?;
            let outputs = field("outputs")?;
            let execs = field("execs")?;
            items.push(SelectedCi {
                id,
                candidate: CiCandidate {
                    start_index: start as u32,
                    length: len as u32,
                    ext_inputs: inputs as u32,
                    ext_outputs: outputs as u32,
                    exec_count: execs,
                    merit: execs * len.saturating_sub(1),
                },
            });
        }
        CiSelection::new(items)
    }

    pub fn load(path: &Path) -> Result<Self, CiError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format v1\n");
        for item in &self.items {
            let c = &item.candidate;
            out.push_str(&format!(
                "ci {} start={} len={} inputs={} outputs={} execs={}\n",
                item.id, c.start_index, c.length, c.ext_inputs, c.ext_outputs, c.exec_count
            ));
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CiError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Repeatedly takes the highest-merit candidate that overlaps nothing chosen
/// so far, until the budget is exhausted or no candidate remains. Ties break
/// toward the lower start index, then the longer sequence. Ids are assigned
/// in ascending start order.
pub fn greedy_select(candidates: &[CiCandidate], budget: Option<usize>) -> CiSelection {
    let budget = budget.unwrap_or(usize::MAX);
    let mut order: Vec<&CiCandidate> = candidates.iter().collect();
    order.sort_by(|a, b| {
        b.merit
            .cmp(&a.merit)
            .then(a.start_index.cmp(&b.start_index))
            .then(b.length.cmp(&a.length))
    });
    let mut chosen: Vec<CiCandidate> = Vec::new();
    for cand in order {
        if chosen.len() >= budget {
            break;
        }
        if chosen.iter().any(|c| c.overlaps(cand)) {
            continue;
        }
        chosen.push(*cand);
    }
    chosen.sort_by_key(|c| c.start_index);
    let items = chosen
        .into_iter()
        .enumerate()
        .map(|(i, candidate)| SelectedCi {
            id: i as u32,
            candidate,
        })
        .collect();
    CiSelection::new(items).expect("greedy output is non-overlapping by construction")
}

/// Outcome of collapsing each chosen range into one custom record and
/// remapping the fetch stream onto the rewritten image.
#[derive(Clone, Debug)]
pub struct RewriteResult {
    pub program: StaticProgram,
    pub trace: DynamicTrace,
    /// old static index -> new static index; many-to-one inside CI ranges
    pub index_map: Vec<u32>,
    pub code_size_before: usize,
    pub code_size_after: usize,
}

/// Rewrites program and trace for the chosen selection. Every dynamic
/// occurrence of a chosen range must be complete; the j fetches of a complete
/// occurrence collapse into one fetch of the custom instruction.
pub fn substitute(
    program: &StaticProgram,
    trace: &DynamicTrace,
    selection: &CiSelection,
) -> Result<RewriteResult, CiError> {
    selection.validate_against(program)?;
    let n = program.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (pos, item) in selection.items().iter().enumerate() {
        for i in item.candidate.start_index..item.candidate.end_index() {
            owner[i as usize] = Some(pos);
        }
    }

    let mut index_map = vec![0u32; n];
    let mut new_records: Vec<InstructionRecord> = Vec::new();
    let mut i = 0usize;
    while i < n {
        let new_index = new_records.len() as u32;
        if let Some(pos) = owner[i] {
            let item = &selection.items()[pos];
            let len = item.candidate.length as usize;
            let io = window_io(program, i, len);
            new_records.push(InstructionRecord {
                index: new_index,
                opcode_class: OpcodeClass::Custom,
                ci_id: Some(item.id),
                dst: io.outputs.first().copied(),
                srcs: io.inputs,
            });
            index_map[i..i + len].fill(new_index);
            i += len;
        } else {
            let mut rec = program.records()[i].clone();
            rec.index = new_index;
            new_records.push(rec);
            index_map[i] = new_index;
            i += 1;
        }
    }
    let code_size_after = new_records.len();
    let new_program = StaticProgram::with_base(
        new_records,
        program.instruction_width(),
        program.base_address(),
    )?;

    let events: Vec<u32> = trace.events().collect();
    let mut new_events = Vec::with_capacity(events.len());
    let mut p = 0usize;
    while p < events.len() {
        let event = events[p] as usize;
        if event >= n {
            return Err(CiError::InvalidSelection(format!(
                "trace index {event} out of range for the program"
            )));
        }
        match owner[event] {
            Some(pos) => {
                let item = &selection.items()[pos];
                let start = item.candidate.start_index as usize;
                let len = item.candidate.length as usize;
                if event != start || p + len > events.len() {
                    return Err(CiError::PartialOccurrence {
                        ci: item.id,
                        trace_pos: p as u64,
                    });
                }
                for offset in 0..len {
                    if events[p + offset] as usize != start + offset {
                        return Err(CiError::PartialOccurrence {
                            ci: item.id,
                            trace_pos: (p + offset) as u64,
                        });
                    }
                }
                new_events.push(index_map[start]);
                p += len;
            }
            None => {
                new_events.push(index_map[event]);
                p += 1;
            }
        }
    }

    Ok(RewriteResult {
        program: new_program,
        trace: DynamicTrace::from_events(&new_events),
        index_map,
        code_size_before: n,
        code_size_after,
    })
}

/// Percentage reductions between two replays of the same cache geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReductionStats {
    pub access_red_pct: f64,
    pub hit_red_pct: f64,
    pub miss_red_pct: f64,
}

pub fn reduction_stats(before: &AccessStats, after: &AccessStats) -> ReductionStats {
    fn pct(before: u64, after: u64) -> f64 {
        if before == 0 {
            0.0
        } else {
            100.0 * (before as f64 - after as f64) / before as f64
        }
    }
    ReductionStats {
        access_red_pct: pct(before.total(), after.total()),
        hit_red_pct: pct(before.hits, after.hits),
        miss_red_pct: pct(before.misses, after.misses),
    }
}
