//! Guard intervals with natural endpoints.

use core::fmt;

use num_rational::Ratio;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Upper {
    Finite(u32),
    Infinite,
}

/// An interval `[lo:hi]`, `(lo:hi)`, `[lo:inf)` and so on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    lo: u32,
    lo_closed: bool,
    hi: Upper,
    hi_closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("empty interval")]
    Empty,
    #[error("infinite upper bound must be open")]
    ClosedInfinity,
}

impl Interval {
    pub fn new(lo: u32, lo_closed: bool, hi: Upper, hi_closed: bool) -> Result<Self, IntervalError> {
        if hi == Upper::Infinite && hi_closed {
            return Err(IntervalError::ClosedInfinity);
        }
        if let Upper::Finite(h) = hi {
            if h < lo || (h == lo && !(lo_closed && hi_closed)) {
                return Err(IntervalError::Empty);
            }
        }
        Ok(Interval {
            lo,
            lo_closed,
            hi,
            hi_closed,
        })
    }

    /// `[lo:hi]`
    pub fn closed(lo: u32, hi: u32) -> Result<Self, IntervalError> {
        Self::new(lo, true, Upper::Finite(hi), true)
    }

    /// `[n:n]`
    pub fn point(n: u32) -> Self {
        Interval {
            lo: n,
            lo_closed: true,
            hi: Upper::Finite(n),
            hi_closed: true,
        }
    }

    /// `[lo:inf)`
    pub fn at_least(lo: u32) -> Self {
        Interval {
            lo,
            lo_closed: true,
            hi: Upper::Infinite,
            hi_closed: false,
        }
    }

    /// `(lo:inf)`
    pub fn greater_than(lo: u32) -> Self {
        Interval {
            lo,
            lo_closed: false,
            hi: Upper::Infinite,
            hi_closed: false,
        }
    }

    /// `[0:inf)`, the guard that always holds.
    pub fn any() -> Self {
        Self::at_least(0)
    }

    pub fn lo(&self) -> u32 {
        self.lo
    }

    pub fn lo_closed(&self) -> bool {
        self.lo_closed
    }

    pub fn hi(&self) -> Upper {
        self.hi
    }

    pub fn hi_closed(&self) -> bool {
        self.hi_closed
    }

    /// Largest finite endpoint.
    pub fn max_constant(&self) -> u32 {
        match self.hi {
            Upper::Finite(h) => h,
            Upper::Infinite => self.lo,
        }
    }

    pub fn contains_int(&self, n: u32) -> bool {
        let above = if self.lo_closed { n >= self.lo } else { n > self.lo };
        let below = match self.hi {
            Upper::Infinite => true,
            Upper::Finite(h) if self.hi_closed => n <= h,
            Upper::Finite(h) => n < h,
        };
        above && below
    }

    /// Whether the open unit interval `(n, n+1)` lies inside.
    pub fn contains_open_unit(&self, n: u32) -> bool {
        let above = self.lo <= n;
        let below = match self.hi {
            Upper::Infinite => true,
            Upper::Finite(h) => h > n,
        };
        above && below
    }

    /// Whether every real strictly above `c` lies inside.
    pub fn contains_all_above(&self, c: u32) -> bool {
        self.hi == Upper::Infinite && self.lo <= c
    }

    pub fn contains(&self, v: &Ratio<u64>) -> bool {
        let lo = Ratio::from_integer(self.lo as u64);
        let above = if self.lo_closed { *v >= lo } else { *v > lo };
        let below = match self.hi {
            Upper::Infinite => true,
            Upper::Finite(h) => {
                let h = Ratio::from_integer(h as u64);
                if self.hi_closed {
                    *v <= h
                } else {
                    *v < h
                }
            }
        };
        above && below
    }

    /// Whether `num / den` lies inside.
    pub fn contains_frac(&self, num: u64, den: u64) -> bool {
        let lo = self.lo as u64 * den;
        let above = if self.lo_closed { num >= lo } else { num > lo };
        let below = match self.hi {
            Upper::Infinite => true,
            Upper::Finite(h) => {
                let h = h as u64 * den;
                if self.hi_closed {
                    num <= h
                } else {
                    num < h
                }
            }
        };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_closed { '[' } else { '(' };
        match self.hi {
            Upper::Infinite => write!(f, "{open}{}:inf)", self.lo),
            Upper::Finite(h) => {
                let close = if self.hi_closed { ']' } else { ')' };
                write!(f, "{open}{}:{h}{close}", self.lo)
            }
        }
    }
}
