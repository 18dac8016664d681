//! Stepsize and momentum schedules, evaluated per epoch. Every schedule
//! is constant within an epoch by construction, which is what the
//! reshuffling analysis requires of the stepsizes.

/// Schedule over epoch counters. The logarithmic decay exponent is fixed
/// at 1.1 and logarithms are natural.
#[derive(Clone, Debug, PartialEq)]
pub enum Schedule {
    /// eta_s = value for all s.
    Constant { value: f64 },
    /// eta_s = initial / (1 + ln(s+1)^1.1).
    LogDecay { initial: f64 },
    /// Constant at `initial` until epoch `stage1`, cut to 0.1x on
    /// [stage1, stage2), and 0.01 * initial / (1 + ln(max(s - stage2, 1))^1.1)
    /// afterwards.
    StagedLstm {
        initial: f64,
        stage1: u64,
        stage2: u64,
    },
    /// Marker wrapper: evaluates exactly as the inner schedule. Kept so
    /// configs can state the per-epoch-constant intent explicitly.
    EpochConstant { inner: Box<Schedule> },
}

const DECAY_EXPONENT: f64 = 1.1;

impl Schedule {
    pub fn eval(&self, epoch: u64) -> f64 {
        match self {
            Schedule::Constant { value } => *value,
            Schedule::LogDecay { initial } => {
                initial / (1.0 + ((epoch as f64) + 1.0).ln().powf(DECAY_EXPONENT))
            }
            Schedule::StagedLstm {
                initial,
                stage1,
                stage2,
            } => {
                if epoch < *stage1 {
                    *initial
                } else if epoch < *stage2 {
                    0.1 * initial
                } else {
                    let shifted = (epoch - stage2).max(1) as f64;
                    0.01 * initial / (1.0 + shifted.ln().powf(DECAY_EXPONENT))
                }
            }
            Schedule::EpochConstant { inner } => inner.eval(epoch),
        }
    }

    /// Initial value (epoch 0).
    pub fn initial(&self) -> f64 {
        self.eval(0)
    }
}
