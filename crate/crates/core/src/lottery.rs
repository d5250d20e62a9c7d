//! Binary lotteries and the four-lottery common ratio problem.

use crate::error::{Error, Result};
use serde::Serialize;

/// A simple lottery paying `prize` with probability `prob` and 0 otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lottery {
    pub prize: f64,
    pub prob: f64,
}

impl Lottery {
    pub fn new(prize: f64, prob: f64) -> Result<Self> {
        if !prize.is_finite() || prize < 0.0 {
            return Err(Error::construction(format!(
                "lottery prize must be finite and >= 0, got {prize}"
            )));
        }
        if !prob.is_finite() || !(0.0..=1.0).contains(&prob) {
            return Err(Error::construction(format!(
                "lottery probability must lie in [0, 1], got {prob}"
            )));
        }
        Ok(Lottery { prize, prob })
    }
}

/// The task quadruple generated by `(x, y, p, r)`:
/// A = (x, 1), B = (y, p), C = (x, r), D = (y, r*p).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommonRatioProblem {
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub r: f64,
}

impl CommonRatioProblem {
    pub fn new(x: f64, y: f64, p: f64, r: f64) -> Result<Self> {
        if !(x.is_finite() && x > 0.0) || !(y.is_finite() && y > 0.0) {
            return Err(Error::construction(format!(
                "prizes must be finite and > 0, got x = {x}, y = {y}"
            )));
        }
        for (name, v) in [("p", p), ("r", r)] {
            if !v.is_finite() || !(v > 0.0 && v <= 1.0) {
                return Err(Error::construction(format!(
                    "{name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(CommonRatioProblem { x, y, p, r })
    }

    pub fn a(&self) -> Lottery {
        Lottery {
            prize: self.x,
            prob: 1.0,
        }
    }

    pub fn b(&self) -> Lottery {
        Lottery {
            prize: self.y,
            prob: self.p,
        }
    }

    pub fn c(&self) -> Lottery {
        Lottery {
            prize: self.x,
            prob: self.r,
        }
    }

    pub fn d(&self) -> Lottery {
        Lottery {
            prize: self.y,
            prob: self.r * self.p,
        }
    }
}

/// Builds the problem, validating parameter ranges.
pub fn make_problem(x: f64, y: f64, p: f64, r: f64) -> Result<CommonRatioProblem> {
    CommonRatioProblem::new(x, y, p, r)
}
