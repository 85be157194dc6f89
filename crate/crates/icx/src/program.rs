//! Static program images, dynamic fetch traces, their text formats, and the
//! synthetic workload generators used for fixtures.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

pub const NUM_REGISTERS: u32 = 32;
pub const DEFAULT_INSTRUCTION_WIDTH: u32 = 4;

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("trace header declares {declared} events, file decodes to {decoded}")]
    CountMismatch { declared: u64, decoded: u64 },
    #[error("generator spec: {0}")]
    Generator(String),
}

/// Coarse instruction classification; the cache model ignores operands, but
/// custom-instruction legality needs classes and dataflow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OpcodeClass {
    Arithmetic,
    Load,
    Store,
    Branch,
    Custom,
}

impl OpcodeClass {
    pub fn canonical(&self) -> &'static str {
        match self {
            OpcodeClass::Arithmetic => "arith",
            OpcodeClass::Load => "load",
            OpcodeClass::Store => "store",
            OpcodeClass::Branch => "branch",
            OpcodeClass::Custom => "custom",
        }
    }
}

impl fmt::Display for OpcodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.canonical())
    }
}

/// One static instruction. `ci_id` is present exactly when the class is
/// `Custom`; custom records may carry more than two sources.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstructionRecord {
    pub index: u32,
    pub opcode_class: OpcodeClass,
    pub ci_id: Option<u32>,
    pub dst: Option<u8>,
    pub srcs: Vec<u8>,
}

/// The code image: densely indexed records at fixed-width addresses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticProgram {
    instructions: Vec<InstructionRecord>,
    instruction_width: u32,
    base_address: u64,
}

impl StaticProgram {
    pub fn new(
        instructions: Vec<InstructionRecord>,
        instruction_width: u32,
    ) -> Result<Self, ProgramError> {
        Self::with_base(instructions, instruction_width, 0)
    }

    pub fn with_base(
        instructions: Vec<InstructionRecord>,
        instruction_width: u32,
        base_address: u64,
    ) -> Result<Self, ProgramError> {
        if instruction_width == 0 {
            return Err(ProgramError::Validation(
                "instruction width must be positive".into(),
            ));
        }
        for (pos, rec) in instructions.iter().enumerate() {
            let expected = pos as u32;
            if rec.index > expected {
                return Err(ProgramError::Validation(format!("gap at index {expected}")));
            }
            if rec.index < expected {
                return Err(ProgramError::Validation(format!(
                    "duplicate index {}",
                    rec.index
                )));
            }
            for reg in rec.dst.iter().chain(rec.srcs.iter()) {
                if u32::from(*reg) >= NUM_REGISTERS {
                    return Err(ProgramError::Validation(format!(
                        "instruction {}: register id {} out of 0-31",
                        rec.index, reg
                    )));
                }
            }
            if rec.opcode_class != OpcodeClass::Custom && rec.srcs.len() > 2 {
                return Err(ProgramError::Validation(format!(
                    "instruction {}: {} source operands exceed 2 for a base opcode",
                    rec.index,
                    rec.srcs.len()
                )));
            }
            match (rec.opcode_class, rec.ci_id) {
                (OpcodeClass::Custom, None) => {
                    return Err(ProgramError::Validation(format!(
                        "instruction {}: custom record without a ci id",
                        rec.index
                    )));
                }
                (OpcodeClass::Custom, Some(_)) => {}
                (_, Some(_)) => {
                    return Err(ProgramError::Validation(format!(
                        "instruction {}: ci id on a non-custom record",
                        rec.index
                    )));
                }
                (_, None) => {}
            }
        }
        Ok(StaticProgram {
            instructions,
            instruction_width,
            base_address,
        })
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn records(&self) -> &[InstructionRecord] {
        &self.instructions
    }

    pub fn instruction_width(&self) -> u32 {
        self.instruction_width
    }

    pub fn base_address(&self) -> u64 {
        self.base_address
    }

    /// Address of instruction `index`: base + index × width.
    pub fn address(&self, index: u32) -> u64 {
        self.base_address + u64::from(index) * u64::from(self.instruction_width)
    }

    pub fn set_instruction_width(&mut self, width: u32) -> Result<(), ProgramError> {
        if width == 0 {
            return Err(ProgramError::Validation(
                "instruction width must be positive".into(),
            ));
        }
        self.instruction_width = width;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ProgramError> {
        let mut width = DEFAULT_INSTRUCTION_WIDTH;
        let mut base = 0u64;
        let mut saw_format = false;
        let mut saw_instruction = false;
        let mut records: Vec<InstructionRecord> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !saw_format {
                if tokens == ["format", "v1"] {
                    saw_format = true;
                    continue;
                }
                return Err(ProgramError::Parse {
                    line,
                    message: "expected `format v1` header".into(),
                });
            }
            match tokens[0] {
                "format" => {
                    return Err(ProgramError::Parse {
                        line,
                        message: "duplicate format header".into(),
                    });
                }
                "width" | "base" if !saw_instruction => {
                    if tokens.len() != 2 {
                        return Err(ProgramError::Parse {
                            line,
                            message: format!("`{}` directive takes one value", tokens[0]),
                        });
                    }
                    if tokens[0] == "width" {
                        width = tokens[1].parse().map_err(|_| ProgramError::Parse {
                            line,
                            message: format!("invalid width `{}`", tokens[1]),
                        })?;
                    } else {
                        base = tokens[1].parse().map_err(|_| ProgramError::Parse {
                            line,
                            message: format!("invalid base `{}`", tokens[1]),
                        })?;
                    }
                }
                _ => {
                    saw_instruction = true;
                    records.push(parse_instruction_line(&tokens, line)?);
                }
            }
        }
        Self::with_base(records, width, base)
    }

    pub fn load(path: &Path) -> Result<Self, ProgramError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format v1\n");
        out.push_str(&format!("width {}\n", self.instruction_width));
        if self.base_address != 0 {
            out.push_str(&format!("base {}\n", self.base_address));
        }
        for rec in &self.instructions {
            let opcode = match (rec.opcode_class, rec.ci_id) {
                (OpcodeClass::Custom, Some(id)) => format!("ci{id}"),
                (class, _) => class.canonical().to_string(),
            };
            let dst = match rec.dst {
                Some(r) => format!("r{r}"),
                None => "-".to_string(),
            };
            let mut fields = format!("{} {} {}", rec.index, opcode, dst);
            for src in &rec.srcs {
                fields.push_str(&format!(" r{src}"));
            }
            out.push_str(&fields);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), ProgramError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_opcode(token: &str) -> Option<(OpcodeClass, Option<u32>)> {
    let class = match token {
        "arith" | "arithmetic" | "add" | "sub" | "mul" | "div" | "and" | "or" | "xor" | "sll"
        | "srl" | "mov" => OpcodeClass::Arithmetic,
        "load" | "ld" | "lw" | "lb" => OpcodeClass::Load,
        "store" | "st" | "sw" | "sb" => OpcodeClass::Store,
        "branch" | "br" | "beq" | "bne" | "jmp" | "jal" => OpcodeClass::Branch,
        _ => {
            let id: u32 = token.strip_prefix("ci")?.parse().ok()?;
            return Some((OpcodeClass::Custom, Some(id)));
        }
    };
    Some((class, None))
}

fn parse_reg(token: &str, line: usize) -> Result<Option<u8>, ProgramError> {
    if token == "-" {
        return Ok(None);
    }
    let value: u32 = token
        .strip_prefix('r')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| ProgramError::Parse {
            line,
            message: format!("invalid register operand `{token}`"),
        })?;
    if value >= NUM_REGISTERS {
        return Err(ProgramError::Validation(format!(
            "register id {value} out of 0-31 (line {line})"
        )));
    }
    Ok(Some(value as u8))
}

fn parse_instruction_line(tokens: &[&str], line: usize) -> Result<InstructionRecord, ProgramError> {
    if tokens.len() < 2 {
        return Err(ProgramError::Parse {
            line,
            message: "expected `index opcode [dst [srcs..]]`".into(),
        });
    }
    let index: u32 = tokens[0].parse().map_err(|_| ProgramError::Parse {
        line,
        message: format!("invalid index `{}`", tokens[0]),
    })?;
    let (opcode_class, ci_id) = parse_opcode(tokens[1]).ok_or_else(|| ProgramError::Parse {
        line,
        message: format!("unknown opcode `{}`", tokens[1]),
    })?;
    let dst = if tokens.len() > 2 {
        parse_reg(tokens[2], line)?
    } else {
        None
    };
    let mut srcs = Vec::new();
    for token in &tokens[3..] {
        if let Some(reg) = parse_reg(token, line)? {
            srcs.push(reg);
        }
    }
    Ok(InstructionRecord {
        index,
        opcode_class,
        ci_id,
        dst,
        srcs,
    })
}

/// One run-length-encoded span of the fetch stream: indices
/// `first..=last`, repeated `count` times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRun {
    pub first: u32,
    pub last: u32,
    pub count: u32,
}

impl TraceRun {
    pub fn events(&self) -> u64 {
        u64::from(self.last - self.first + 1) * u64::from(self.count)
    }
}

/// The dynamic fetch stream as a sequence of static-instruction indices,
/// stored run-length encoded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DynamicTrace {
    runs: Vec<TraceRun>,
    total: u64,
}

impl DynamicTrace {
    pub fn from_runs(runs: Vec<TraceRun>, program_len: usize) -> Result<Self, ProgramError> {
        let mut total = 0u64;
        for run in &runs {
            if run.first > run.last {
                return Err(ProgramError::Validation(format!(
                    "descending span {}..{}",
                    run.first, run.last
                )));
            }
            if run.count == 0 {
                return Err(ProgramError::Validation("span repeated 0 times".into()));
            }
            if run.last as usize >= program_len {
                return Err(ProgramError::Validation(format!(
                    "index {} out of range (program has {} instructions)",
                    run.last, program_len
                )));
            }
            total += run.events();
        }
        Ok(DynamicTrace { runs, total })
    }

    /// Builds a trace from raw events, coalescing ascending chains and
    /// repeated identical chains into runs. Indices are not range-checked.
    pub fn from_events(events: &[u32]) -> Self {
        let mut runs: Vec<TraceRun> = Vec::new();
        let mut total = 0u64;
        let mut i = 0;
        while i < events.len() {
            let first = events[i];
            let mut last = first;
            i += 1;
            while i < events.len() && events[i] == last.wrapping_add(1) {
                last = events[i];
                i += 1;
            }
            total += u64::from(last - first + 1);
            if let Some(prev) = runs.last_mut() {
                if prev.first == first && prev.last == last {
                    prev.count += 1;
                    continue;
                }
            }
            runs.push(TraceRun {
                first,
                last,
                count: 1,
            });
        }
        DynamicTrace { runs, total }
    }

    pub fn total_accesses(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn runs(&self) -> &[TraceRun] {
        &self.runs
    }

    pub fn max_index(&self) -> Option<u32> {
        self.runs.iter().map(|r| r.last).max()
    }

    pub fn events(&self) -> impl Iterator<Item = u32> + '_ {
        self.runs
            .iter()
            .flat_map(|r| (0..r.count).flat_map(move |_| r.first..=r.last))
    }

    pub fn parse(text: &str, program_len: usize) -> Result<Self, ProgramError> {
        let mut saw_format = false;
        let mut declared: Option<u64> = None;
        let mut runs: Vec<TraceRun> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !saw_format {
                if tokens == ["format", "v1"] {
                    saw_format = true;
                    continue;
                }
                return Err(ProgramError::Parse {
                    line,
                    message: "expected `format v1` header".into(),
                });
            }
            if declared.is_none() {
                if tokens.len() == 2 && tokens[0] == "trace" {
                    declared = Some(tokens[1].parse().map_err(|_| ProgramError::Parse {
                        line,
                        message: format!("invalid event count `{}`", tokens[1]),
                    })?);
                    continue;
                }
                return Err(ProgramError::Parse {
                    line,
                    message: "expected `trace <event_count>` header".into(),
                });
            }
            let mut i = 0;
            while i < tokens.len() {
                let token = tokens[i];
                if let Some((a, b)) = token.split_once("..") {
                    let first: u32 = a.parse().map_err(|_| ProgramError::Parse {
                        line,
                        message: format!("invalid span `{token}`"),
                    })?;
                    let last: u32 = b.parse().map_err(|_| ProgramError::Parse {
                        line,
                        message: format!("invalid span `{token}`"),
                    })?;
                    let repeat = tokens.get(i + 1).ok_or_else(|| ProgramError::Parse {
                        line,
                        message: format!("span `{token}` missing `xN` repeat count"),
                    })?;
                    let count: u32 = repeat
                        .strip_prefix('x')
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| ProgramError::Parse {
                            line,
                            message: format!("invalid repeat count `{repeat}`"),
                        })?;
                    runs.push(TraceRun { first, last, count });
                    i += 2;
                } else {
                    let index: u32 = token.parse().map_err(|_| ProgramError::Parse {
                        line,
                        message: format!("invalid event `{token}`"),
                    })?;
                    runs.push(TraceRun {
                        first: index,
                        last: index,
                        count: 1,
                    });
                    i += 1;
                }
            }
        }
        let declared = declared.ok_or_else(|| ProgramError::Parse {
            line: text.lines().count().max(1),
            message: "missing `trace <event_count>` header".into(),
        })?;
        let trace = Self::from_runs(runs, program_len)?;
        if trace.total != declared {
            return Err(ProgramError::CountMismatch {
                declared,
                decoded: trace.total,
            });
        }
        Ok(trace)
    }

    pub fn load(path: &Path, program: &StaticProgram) -> Result<Self, ProgramError> {
        Self::parse(&fs::read_to_string(path)?, program.len())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("format v1\ntrace {}\n", self.total);
        for run in &self.runs {
            if run.first == run.last && run.count == 1 {
                out.push_str(&format!("{}\n", run.first));
            } else {
                out.push_str(&format!("{}..{} x{}\n", run.first, run.last, run.count));
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), ProgramError> {
        fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Deterministic workload generators standing in for real benchmark traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GeneratorSpec {
    StraightLoop {
        instructions: u32,
        iterations: u32,
    },
    HotCold {
        hot_len: u32,
        cold_len: u32,
        hot_repeats: u32,
    },
    UniformRandom {
        instructions: u32,
        events: u64,
        seed: Option<u64>,
    },
}

impl GeneratorSpec {
    /// Produces the program/trace pair for this generator. `default_seed`
    /// is used by `uniform-random` when no explicit seed was given.
    pub fn synthesize(
        &self,
        default_seed: u64,
    ) -> Result<(StaticProgram, DynamicTrace), ProgramError> {
        match *self {
            GeneratorSpec::StraightLoop {
                instructions,
                iterations,
            } => {
                require_positive(instructions as u64, "instructions")?;
                require_positive(iterations as u64, "iterations")?;
                let program = independent_alu_program(instructions);
                let trace = DynamicTrace::from_runs(
                    vec![TraceRun {
                        first: 0,
                        last: instructions - 1,
                        count: iterations,
                    }],
                    program.len(),
                )?;
                Ok((program, trace))
            }
            GeneratorSpec::HotCold {
                hot_len,
                cold_len,
                hot_repeats,
            } => {
                require_positive(hot_len as u64, "hot_len")?;
                require_positive(cold_len as u64, "cold_len")?;
                require_positive(hot_repeats as u64, "hot_repeats")?;
                let program = independent_alu_program(hot_len + cold_len);
                let trace = DynamicTrace::from_runs(
                    vec![
                        TraceRun {
                            first: 0,
                            last: hot_len - 1,
                            count: hot_repeats,
                        },
                        TraceRun {
                            first: hot_len,
                            last: hot_len + cold_len - 1,
                            count: 1,
                        },
                    ],
                    program.len(),
                )?;
                Ok((program, trace))
            }
            GeneratorSpec::UniformRandom {
                instructions,
                events,
                seed,
            } => {
                require_positive(instructions as u64, "instructions")?;
                require_positive(events, "events")?;
                let program = independent_alu_program(instructions);
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(default_seed));
                let events: Vec<u32> =
                    (0..events).map(|_| rng.random_range(0..instructions)).collect();
                Ok((program, DynamicTrace::from_events(&events)))
            }
        }
    }
}

fn require_positive(value: u64, name: &str) -> Result<(), ProgramError> {
    if value == 0 {
        return Err(ProgramError::Generator(format!("{name} must be positive")));
    }
    Ok(())
}

/// Independent two-input ALU instructions: destinations r0-r15, sources
/// r16-r31, so no instruction reads another's result.
fn independent_alu_program(n: u32) -> StaticProgram {
    let records = (0..n)
        .map(|i| InstructionRecord {
            index: i,
            opcode_class: OpcodeClass::Arithmetic,
            ci_id: None,
            dst: Some((i % 16) as u8),
            srcs: vec![(16 + (2 * i) % 16) as u8, (16 + (2 * i + 1) % 16) as u8],
        })
        .collect();
    StaticProgram::new(records, DEFAULT_INSTRUCTION_WIDTH).expect("generated program is valid")
}

impl FromStr for GeneratorSpec {
    type Err = ProgramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |msg: String| ProgramError::Generator(msg);
        let (name, rest) = s
            .trim()
            .split_once('(')
            .ok_or_else(|| err(format!("`{s}` is not of the form name(args)")))?;
        let args_str = rest
            .strip_suffix(')')
            .ok_or_else(|| err(format!("`{s}` is missing a closing parenthesis")))?;
        let args: Vec<u64> = args_str
            .split(',')
            .map(|a| a.trim().parse::<u64>())
            .collect::<Result<_, _>>()
            .map_err(|_| err(format!("`{s}` has a non-numeric argument")))?;
        let arg_u32 = |i: usize| -> Result<u32, ProgramError> {
            u32::try_from(args[i]).map_err(|_| err(format!("argument {} too large", i + 1)))
        };
        match (name.trim(), args.len()) {
            ("straight-loop", 2) => Ok(GeneratorSpec::StraightLoop {
                instructions: arg_u32(0)?,
                iterations: arg_u32(1)?,
            }),
            ("hot-cold", 3) => Ok(GeneratorSpec::HotCold {
                hot_len: arg_u32(0)?,
                cold_len: arg_u32(1)?,
                hot_repeats: arg_u32(2)?,
            }),
            ("uniform-random", 2 | 3) => Ok(GeneratorSpec::UniformRandom {
                instructions: arg_u32(0)?,
                events: args[1],
                seed: args.get(2).copied(),
            }),
            (other, n) => Err(err(format!(
                "unknown generator `{other}` with {n} argument(s); expected \
                 straight-loop(n,iters), hot-cold(hot,cold,repeats) or \
                 uniform-random(n,events[,seed])"
            ))),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorSpec::StraightLoop {
                instructions,
                iterations,
            } => write!(f, "straight-loop({instructions},{iterations})"),
            GeneratorSpec::HotCold {
                hot_len,
                cold_len,
                hot_repeats,
            } => write!(f, "hot-cold({hot_len},{cold_len},{hot_repeats})"),
            GeneratorSpec::UniformRandom {
                instructions,
                events,
                seed: Some(seed),
            } => write!(f, "uniform-random({instructions},{events},{seed})"),
            GeneratorSpec::UniformRandom {
                instructions,
                events,
                seed: None,
            } => write!(f, "uniform-random({instructions},{events})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_three_line_program() {
        let text = "format v1\n0 add r1 r2 r3\n1 ld r4 r1\n2 br - r4\n";
        let program = StaticProgram::parse(text).unwrap();
        assert_eq!(program.len(), 3);
        assert_eq!(program.instruction_width(), 4);
        assert_eq!(program.address(0), 0);
        assert_eq!(program.address(1), 4);
        assert_eq!(program.address(2), 8);
        let recs = program.records();
        assert_eq!(recs[0].opcode_class, OpcodeClass::Arithmetic);
        assert_eq!(recs[0].dst, Some(1));
        assert_eq!(recs[0].srcs, vec![2, 3]);
        assert_eq!(recs[1].opcode_class, OpcodeClass::Load);
        assert_eq!(recs[2].opcode_class, OpcodeClass::Branch);
        assert_eq!(recs[2].dst, None);
        assert_eq!(recs[2].srcs, vec![4]);
    }

    #[test]
    fn empty_file_is_an_empty_program() {
        let program = StaticProgram::parse("").unwrap();
        assert!(program.is_empty());
        let program = StaticProgram::parse("# only a comment\n").unwrap();
        assert!(program.is_empty());
    }

    #[test]
    fn gapped_indices_are_rejected() {
        let text = "format v1\n0 add r1 r2 r3\n2 add r4 r5 r6\n";
        let err = StaticProgram::parse(text).unwrap_err();
        assert!(err.to_string().contains("gap at index 1"), "{err}");
    }

    #[test]
    fn duplicate_indices_are_rejected() {
        let text = "format v1\n0 add r1 r2 r3\n0 add r4 r5 r6\n";
        let err = StaticProgram::parse(text).unwrap_err();
        assert!(err.to_string().contains("duplicate index 0"), "{err}");
    }

    #[test]
    fn out_of_range_register_is_a_validation_error() {
        let text = "format v1\n0 add r32 r2 r3\n";
        let err = StaticProgram::parse(text).unwrap_err();
        assert!(matches!(err, ProgramError::Validation(_)), "{err}");
        assert!(err.to_string().contains("register id 32 out of 0-31"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "format v1\n0 add r1 r2 r3\nnonsense line here\n";
        let err = StaticProgram::parse(text).unwrap_err();
        match err {
            ProgramError::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn base_instructions_allow_at_most_two_sources() {
        let text = "format v1\n0 add r1 r2 r3 r4\n";
        let err = StaticProgram::parse(text).unwrap_err();
        assert!(err.to_string().contains("exceed 2"), "{err}");
        // custom records may carry more
        let text = "format v1\n0 ci0 r1 r2 r3 r4\n";
        let program = StaticProgram::parse(text).unwrap();
        assert_eq!(program.records()[0].srcs.len(), 3);
        assert_eq!(program.records()[0].ci_id, Some(0));
    }

    #[test]
    fn width_and_base_directives_round_trip() {
        let text = "format v1\nwidth 8\nbase 4096\n0 add r1 r2 r3\n";
        let program = StaticProgram::parse(text).unwrap();
        assert_eq!(program.instruction_width(), 8);
        assert_eq!(program.address(0), 4096);
        let reparsed = StaticProgram::parse(&program.to_text()).unwrap();
        assert_eq!(program, reparsed);
    }

    #[test]
    fn program_round_trips_through_text() {
        let (program, _) = GeneratorSpec::StraightLoop {
            instructions: 6,
            iterations: 1,
        }
        .synthesize(0)
        .unwrap();
        let reparsed = StaticProgram::parse(&program.to_text()).unwrap();
        assert_eq!(program, reparsed);
    }

    #[test]
    fn trace_of_bare_events_decodes() {
        let text = "format v1\ntrace 6\n0 1 2 0 1 2\n";
        let trace = DynamicTrace::parse(text, 3).unwrap();
        assert_eq!(trace.total_accesses(), 6);
        let events: Vec<u32> = trace.events().collect();
        assert_eq!(events, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn rle_span_expands() {
        let text = "format v1\ntrace 800\n0..7 x100\n";
        let trace = DynamicTrace::parse(text, 8).unwrap();
        assert_eq!(trace.total_accesses(), 800);
        let events: Vec<u32> = trace.events().take(9).collect();
        assert_eq!(events, vec![0, 1, 2, 3, 4, 5, 6, 7, 0]);
    }

    #[test]
    fn out_of_range_event_is_rejected() {
        let text = "format v1\ntrace 1\n9\n";
        let err = DynamicTrace::parse(text, 3).unwrap_err();
        assert!(err.to_string().contains("index 9 out of range"), "{err}");
    }

    #[test]
    fn header_event_count_mismatch_is_an_integrity_error() {
        let text = "format v1\ntrace 5\n0 1 2\n";
        let err = DynamicTrace::parse(text, 3).unwrap_err();
        assert!(matches!(
            err,
            ProgramError::CountMismatch {
                declared: 5,
                decoded: 3
            }
        ));
    }

    #[test]
    fn descending_span_is_rejected() {
        let text = "format v1\ntrace 2\n3..2 x1\n";
        let err = DynamicTrace::parse(text, 8).unwrap_err();
        assert!(err.to_string().contains("descending span"), "{err}");
    }

    #[test]
    fn trace_round_trips_preserving_rle() {
        let text = "format v1\ntrace 807\n0..7 x100\n3\n5..7 x2\n";
        let trace = DynamicTrace::parse(text, 8).unwrap();
        let reparsed = DynamicTrace::parse(&trace.to_text(), 8).unwrap();
        assert_eq!(trace, reparsed);
        assert_eq!(trace.runs().len(), 3);
    }

    #[test]
    fn from_events_coalesces_loops() {
        let events: Vec<u32> = (0..4).chain(0..4).chain(0..4).collect();
        let trace = DynamicTrace::from_events(&events);
        assert_eq!(
            trace.runs(),
            &[TraceRun {
                first: 0,
                last: 3,
                count: 3
            }]
        );
        assert_eq!(trace.total_accesses(), 12);
    }

    #[test]
    fn straight_loop_generator_cycles() {
        let (program, trace) = GeneratorSpec::StraightLoop {
            instructions: 8,
            iterations: 10,
        }
        .synthesize(0)
        .unwrap();
        assert_eq!(program.len(), 8);
        assert_eq!(trace.total_accesses(), 80);
        let events: Vec<u32> = trace.events().take(10).collect();
        assert_eq!(events, vec![0, 1, 2, 3, 4, 5, 6, 7, 0, 1]);
    }

    #[test]
    fn hot_cold_generator_shape() {
        let (program, trace) = GeneratorSpec::HotCold {
            hot_len: 4,
            cold_len: 64,
            hot_repeats: 50,
        }
        .synthesize(0)
        .unwrap();
        assert_eq!(program.len(), 68);
        assert_eq!(trace.total_accesses(), 4 * 50 + 64);
        assert_eq!(trace.runs()[0].count, 50);
        assert_eq!(trace.runs()[1].count, 1);
    }

    #[test]
    fn uniform_random_is_deterministic_per_seed() {
        let spec = GeneratorSpec::UniformRandom {
            instructions: 16,
            events: 1000,
            seed: Some(7),
        };
        let (_, a) = spec.synthesize(0).unwrap();
        let (_, b) = spec.synthesize(99).unwrap();
        assert_eq!(a, b);
        let other = GeneratorSpec::UniformRandom {
            instructions: 16,
            events: 1000,
            seed: Some(8),
        };
        let (_, c) = other.synthesize(0).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn non_positive_generator_sizes_are_rejected() {
        let err = GeneratorSpec::StraightLoop {
            instructions: 0,
            iterations: 5,
        }
        .synthesize(0)
        .unwrap_err();
        assert!(matches!(err, ProgramError::Generator(_)));
    }

    #[test]
    fn generator_spec_strings_round_trip() {
        for s in [
            "straight-loop(8,10)",
            "hot-cold(4,64,50)",
            "uniform-random(64,1000,7)",
            "uniform-random(64,1000)",
        ] {
            let spec: GeneratorSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("mystery(1,2)".parse::<GeneratorSpec>().is_err());
        assert!("straight-loop(8)".parse::<GeneratorSpec>().is_err());
    }
}
