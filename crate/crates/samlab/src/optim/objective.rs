use crate::autodiff::{GradVector, ParamVector, Tape};

use super::error::OptimError;

/// A differentiable scalar objective the optimizers can drive.
///
/// Implementations count their own forward/backward passes so tests and the
/// throughput harness can verify cost claims against what the objective
/// actually executed rather than what a step function reports.
pub trait Objective {
    /// Evaluates the loss and its gradient at `params` (one forward pass and
    /// one backward pass).
    fn loss_and_grad(&mut self, params: &ParamVector) -> Result<(f64, GradVector), OptimError>;

    /// Evaluates the loss alone (one forward pass).
    fn loss_only(&mut self, params: &ParamVector) -> Result<f64, OptimError>;

    /// Cumulative `(forwards, backwards)` executed since construction.
    fn counts(&self) -> (u64, u64);
}

/// An [`Objective`] backed by a recorded tape.
pub struct TapeObjective {
    tape: Tape,
    forwards: u64,
    backwards: u64,
}

impl TapeObjective {
    pub fn new(tape: Tape) -> Self {
        Self { tape, forwards: 0, backwards: 0 }
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    pub fn into_tape(self) -> Tape {
        self.tape
    }
}

impl Objective for TapeObjective {
    fn loss_and_grad(&mut self, params: &ParamVector) -> Result<(f64, GradVector), OptimError> {
        let loss = self.tape.forward(params)?;
        self.forwards += 1;
        let grad = self.tape.backward()?;
        self.backwards += 1;
        Ok((loss, grad))
    }

    fn loss_only(&mut self, params: &ParamVector) -> Result<f64, OptimError> {
        let loss = self.tape.forward(params)?;
        self.forwards += 1;
        Ok(loss)
    }

    fn counts(&self) -> (u64, u64) {
        (self.forwards, self.backwards)
    }
}
