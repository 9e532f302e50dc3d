//! Maximal-length LFSR bit sources.

use crate::error::{invalid, Result};

/// Feedback taps (1-based bit positions) of a primitive polynomial per degree.
const TAPS: [&[u32]; 30] = [
    &[2, 1],
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
    &[25, 22],
    &[26, 6, 2, 1],
    &[27, 5, 2, 1],
    &[28, 25],
    &[29, 27],
    &[30, 6, 4, 1],
    &[31, 28],
];

/// Fibonacci LFSR producing a maximal-length (2^degree - 1) sequence.
#[derive(Debug, Clone)]
pub struct Lfsr {
    state: u32,
    degree: u32,
    mask: u32,
    taps: &'static [u32],
}

impl Lfsr {
    pub fn new(degree: u32, seed: u32) -> Result<Self> {
        if !(2..=31).contains(&degree) {
            return Err(invalid(format!("PRBS degree {degree} outside [2, 31]")));
        }
        let mask = (1u32 << degree) - 1;
        if seed & mask == 0 {
            return Err(invalid("PRBS seed must be nonzero in the low `degree` bits"));
        }
        Ok(Self {
            state: seed & mask,
            degree,
            mask,
            taps: TAPS[(degree - 2) as usize],
        })
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    pub fn next_bit(&mut self) -> u8 {
        let out = (self.state >> (self.degree - 1)) & 1;
        let fb = self
            .taps
            .iter()
            .fold(0, |acc, &t| acc ^ ((self.state >> (t - 1)) & 1));
        self.state = ((self.state << 1) | fb) & self.mask;
        out as u8
    }
}

/// `length` bits of the maximal-length sequence of the given degree.
pub fn generate_prbs(degree: u32, length: usize, seed: u32) -> Result<Vec<u8>> {
    let mut lfsr = Lfsr::new(degree, seed)?;
    Ok((0..length).map(|_| lfsr.next_bit()).collect())
}
