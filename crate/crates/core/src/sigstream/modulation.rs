use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The ten modulation classes. The declaration order is the class label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModType {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Qam64,
    Bfsk,
    Cpfsk,
    Pam4,
    Wbfm,
    AmDsb,
}

impl ModType {
    pub const ALL: [ModType; 10] = [
        ModType::Bpsk,
        ModType::Qpsk,
        ModType::Psk8,
        ModType::Qam16,
        ModType::Qam64,
        ModType::Bfsk,
        ModType::Cpfsk,
        ModType::Pam4,
        ModType::Wbfm,
        ModType::AmDsb,
    ];

    pub const COUNT: usize = 10;

    pub fn label(self) -> usize {
        self as usize
    }

    pub fn from_label(label: usize) -> Result<ModType> {
        ModType::ALL
            .get(label)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("class label {label} out of range")))
    }

    pub fn is_analog(self) -> bool {
        matches!(self, ModType::Wbfm | ModType::AmDsb)
    }

    /// Bits carried per symbol; `None` for the analog classes.
    pub fn bits_per_symbol(self) -> Option<u32> {
        match self {
            ModType::Bpsk | ModType::Bfsk | ModType::Cpfsk => Some(1),
            ModType::Qpsk | ModType::Pam4 => Some(2),
            ModType::Psk8 => Some(3),
            ModType::Qam16 => Some(4),
            ModType::Qam64 => Some(6),
            ModType::Wbfm | ModType::AmDsb => None,
        }
    }

    pub fn is_fsk(self) -> bool {
        matches!(self, ModType::Bfsk | ModType::Cpfsk)
    }

    pub fn name(self) -> &'static str {
        match self {
            ModType::Bpsk => "BPSK",
            ModType::Qpsk => "QPSK",
            ModType::Psk8 => "8PSK",
            ModType::Qam16 => "QAM16",
            ModType::Qam64 => "QAM64",
            ModType::Bfsk => "BFSK",
            ModType::Cpfsk => "CPFSK",
            ModType::Pam4 => "PAM4",
            ModType::Wbfm => "WBFM",
            ModType::AmDsb => "AM-DSB",
        }
    }
}

impl fmt::Display for ModType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_uppercase();
        ModType::ALL
            .into_iter()
            .find(|m| {
                let n: String = m.name().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
                n == key || (key == "PSK8" && *m == ModType::Psk8)
            })
            .ok_or_else(|| Error::InvalidInput(format!("unknown modulation {s:?}")))
    }
}

fn gray_to_position(g: u32) -> u32 {
    let mut p = g;
    let mut shift = g >> 1;
    while shift != 0 {
        p ^= shift;
        shift >>= 1;
    }
    p
}

/// Gray-coded amplitude level in `{-(m-1), .., m-1}` for an `m`-ary axis.
fn pam_level(g: u32, m: u32) -> f64 {
    2.0 * gray_to_position(g) as f64 - (m as f64 - 1.0)
}

/// Maps symbol indices to unit-energy constellation points. For BFSK and
/// CPFSK the output is a frequency token: `+1` for the upper tone and `-1`
/// for the lower one.
pub fn map_symbols(levels: &[u32], m: ModType) -> Result<Vec<Complex64>> {
    let bits = m.bits_per_symbol().ok_or_else(|| {
        Error::InvalidInput(format!("{m} is analog and has no symbol alphabet"))
    })?;
    let size = 1u32 << bits;
    if let Some(&bad) = levels.iter().find(|&&s| s >= size) {
        return Err(Error::InvalidInput(format!(
            "symbol index {bad} outside the {size}-point alphabet of {m}"
        )));
    }
    let point = |s: u32| -> Complex64 {
        match m {
            ModType::Bpsk | ModType::Bfsk | ModType::Cpfsk => {
                Complex64::new(1.0 - 2.0 * s as f64, 0.0)
            }
            ModType::Qpsk => {
                let r = std::f64::consts::FRAC_1_SQRT_2;
                Complex64::new(
                    r * (1.0 - 2.0 * (s >> 1) as f64),
                    r * (1.0 - 2.0 * (s & 1) as f64),
                )
            }
            ModType::Psk8 => {
                let p = gray_to_position(s) as f64;
                Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * p / 8.0)
            }
            ModType::Qam16 => {
                let norm = 10f64.sqrt();
                Complex64::new(pam_level(s >> 2, 4) / norm, pam_level(s & 3, 4) / norm)
            }
            ModType::Qam64 => {
                let norm = 42f64.sqrt();
                Complex64::new(pam_level(s >> 3, 8) / norm, pam_level(s & 7, 8) / norm)
            }
            ModType::Pam4 => Complex64::new(pam_level(s, 4) / 5f64.sqrt(), 0.0),
            ModType::Wbfm | ModType::AmDsb => unreachable!("analog rejected above"),
        }
    };
    Ok(levels.iter().map(|&s| point(s)).collect())
}
