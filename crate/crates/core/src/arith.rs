//! Scalar abstraction shared by every per-pixel kernel.
//!
//! Kernels are written once, generic over [`Arith`]. Running them with `f64`
//! compiles to plain floating-point code; running them with [`Counted`]
//! tallies each arithmetic operation into a thread-local ledger, attributed to
//! the stage the kernel most recently announced with [`Arith::enter`]. The
//! cost model uses the ledger as its measured operation profile.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Sub};

use serde::{Deserialize, Serialize};

/// Arithmetic operation classes tracked by the cost model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    ShiftDiv,
    Sqrt,
    Cbrt,
}

impl OpKind {
    pub const ALL: [OpKind; 7] = [
        OpKind::Add,
        OpKind::Sub,
        OpKind::Mul,
        OpKind::Div,
        OpKind::ShiftDiv,
        OpKind::Sqrt,
        OpKind::Cbrt,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            OpKind::Add => "+",
            OpKind::Sub => "-",
            OpKind::Mul => "x",
            OpKind::Div => "/",
            OpKind::ShiftDiv => ">>",
            OpKind::Sqrt => "sqrt",
            OpKind::Cbrt => "cbrt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Numeric {
    Integer,
    Float,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Projection,
    Distance,
}

/// Static description of a kernel stage, used to attribute counted ops.
#[derive(Debug, PartialEq, Eq, Hash)]
pub struct StageTag {
    pub phase: Phase,
    pub label: &'static str,
    pub numeric: Numeric,
    pub parallel: bool,
    pub scope: Scope,
}

/// How a stage's operation count depends on the band count `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Proportional to `N`.
    PerBand,
    /// A chained accumulation over `N` terms: `N - 1`.
    Reduction,
    /// Independent of `N`.
    Fixed,
}

pub trait Arith:
    Copy + PartialOrd + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
    /// Brings an input value in without counting.
    fn lift(v: f64) -> Self;
    fn value(self) -> f64;
    fn sqrt(self) -> Self;
    fn cbrt(self) -> Self;
    /// Division by `2^m`.
    fn shift_div(self, m: u32) -> Self;
    /// Uncounted sign removal; a comparator in hardware.
    fn abs(self) -> Self {
        if self.value() < 0.0 {
            Self::lift(-self.value())
        } else {
            self
        }
    }
    fn enter(_stage: &'static StageTag) {}
}

impl Arith for f64 {
    #[inline(always)]
    fn lift(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn value(self) -> f64 {
        self
    }
    #[inline(always)]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline(always)]
    fn cbrt(self) -> Self {
        f64::cbrt(self)
    }
    #[inline(always)]
    fn shift_div(self, m: u32) -> Self {
        self / (1u64 << m) as f64
    }
    #[inline(always)]
    fn abs(self) -> Self {
        f64::abs(self)
    }
}

/// One ledger line: ops of one kind performed inside one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct TallyEntry {
    pub stage: &'static StageTag,
    pub op: OpKind,
    pub count: u64,
}

/// Ops recorded during a counted run, in first-seen order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Tally {
    pub entries: Vec<TallyEntry>,
}

impl Tally {
    pub fn total(&self, op: OpKind) -> u64 {
        self.entries.iter().filter(|e| e.op == op).map(|e| e.count).sum()
    }

    pub fn phase_total(&self, phase: Phase, op: OpKind) -> u64 {
        self.entries
            .iter()
            .filter(|e| e.op == op && e.stage.phase == phase)
            .map(|e| e.count)
            .sum()
    }

    fn record(&mut self, stage: &'static StageTag, op: OpKind) {
        match self
            .entries
            .iter_mut()
            .find(|e| std::ptr::eq(e.stage, stage) && e.op == op)
        {
            Some(e) => e.count += 1,
            None => self.entries.push(TallyEntry { stage, op, count: 1 }),
        }
    }
}

static UNSTAGED: StageTag = StageTag {
    phase: Phase::Distance,
    label: "unstaged",
    numeric: Numeric::Float,
    parallel: false,
    scope: Scope::Fixed,
};

struct Ledger {
    stage: &'static StageTag,
    tally: Tally,
}

thread_local! {
    static LEDGER: RefCell<Option<Ledger>> = const { RefCell::new(None) };
}

fn record(op: OpKind) {
    LEDGER.with(|l| {
        if let Some(ledger) = l.borrow_mut().as_mut() {
            let stage = ledger.stage;
            ledger.tally.record(stage, op);
        }
    });
}

/// Runs `f` with counting enabled on the current thread and returns what it
/// recorded. Nested calls are not supported.
pub fn with_counting<R>(f: impl FnOnce() -> R) -> (R, Tally) {
    LEDGER.with(|l| {
        let mut slot = l.borrow_mut();
        assert!(slot.is_none(), "with_counting does not nest");
        *slot = Some(Ledger {
            stage: &UNSTAGED,
            tally: Tally::default(),
        });
    });
    let out = f();
    let ledger = LEDGER.with(|l| l.borrow_mut().take()).expect("ledger present");
    (out, ledger.tally)
}

/// `f64` that reports every arithmetic operation to the active ledger.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Counted(pub f64);

impl Add for Counted {
    type Output = Counted;
    fn add(self, rhs: Counted) -> Counted {
        record(OpKind::Add);
        Counted(self.0 + rhs.0)
    }
}

impl Sub for Counted {
    type Output = Counted;
    fn sub(self, rhs: Counted) -> Counted {
        record(OpKind::Sub);
        Counted(self.0 - rhs.0)
    }
}

impl Mul for Counted {
    type Output = Counted;
    fn mul(self, rhs: Counted) -> Counted {
        record(OpKind::Mul);
        Counted(self.0 * rhs.0)
    }
}

impl Div for Counted {
    type Output = Counted;
    fn div(self, rhs: Counted) -> Counted {
        record(OpKind::Div);
        Counted(self.0 / rhs.0)
    }
}

impl Arith for Counted {
    fn lift(v: f64) -> Self {
        Counted(v)
    }
    fn value(self) -> f64 {
        self.0
    }
    fn sqrt(self) -> Self {
        record(OpKind::Sqrt);
        Counted(self.0.sqrt())
    }
    fn cbrt(self) -> Self {
        record(OpKind::Cbrt);
        Counted(self.0.cbrt())
    }
    fn shift_div(self, m: u32) -> Self {
        record(OpKind::ShiftDiv);
        Counted(self.0 / (1u64 << m) as f64)
    }
    fn enter(stage: &'static StageTag) {
        LEDGER.with(|l| {
            if let Some(ledger) = l.borrow_mut().as_mut() {
                ledger.stage = stage;
            }
        });
    }
}

/// Sum of `values` accumulated left to right, the first element seeding the
/// accumulator (`len - 1` additions).
pub fn chain_sum<S: Arith>(values: impl IntoIterator<Item = S>) -> S {
    let mut it = values.into_iter();
    let first = it.next().unwrap_or(S::lift(0.0));
    it.fold(first, |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    static A: StageTag = StageTag {
        phase: Phase::Distance,
        label: "a",
        numeric: Numeric::Float,
        parallel: true,
        scope: Scope::PerBand,
    };
    static B: StageTag = StageTag {
        phase: Phase::Distance,
        label: "b",
        numeric: Numeric::Float,
        parallel: false,
        scope: Scope::Fixed,
    };

    fn kernel<S: Arith>(x: S, y: S) -> S {
        S::enter(&A);
        let d = x - y;
        let sq = d * d;
        S::enter(&B);
        (sq + sq).sqrt()
    }

    #[test]
    fn counted_matches_plain_and_tallies_by_stage() {
        let plain = kernel(5.0f64, 2.0);
        let (counted, tally) = with_counting(|| kernel(Counted(5.0), Counted(2.0)));
        assert_eq!(plain, counted.0);
        assert_eq!(tally.entries.len(), 4);
        assert_eq!(tally.total(OpKind::Sub), 1);
        assert_eq!(tally.total(OpKind::Mul), 1);
        assert_eq!(tally.total(OpKind::Add), 1);
        assert_eq!(tally.total(OpKind::Sqrt), 1);
        assert_eq!(tally.entries[2].stage.label, "b");
    }

    #[test]
    fn counting_outside_ledger_is_silent() {
        let v = Counted(1.0) + Counted(2.0);
        assert_eq!(v.0, 3.0);
        let (_, t) = with_counting(|| ());
        assert!(t.entries.is_empty());
    }

    #[test]
    fn chain_sum_uses_len_minus_one_adds() {
        let (s, t) = with_counting(|| chain_sum([1.0, 2.0, 3.0, 4.0].map(Counted)));
        assert_eq!(s.0, 10.0);
        assert_eq!(t.total(OpKind::Add), 3);
    }
}
