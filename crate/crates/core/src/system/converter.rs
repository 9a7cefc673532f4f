//! DA/AD interfaces.
//!
//! Bipolar converters over `[-v_ref, +v_ref)`: with `LSB = 2 v_ref / 2^bits`,
//! code `c` maps to `-v_ref + c * LSB`. Code 0 is `-v_ref`, the top code is
//! `+v_ref - LSB` and 0 V is exactly representable (code `2^(bits-1)`).

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterSpec {
    pub dac_bits: u32,
    pub adc_bits: u32,
    pub v_ref: f64,
}

impl Default for ConverterSpec {
    fn default() -> Self {
        Self {
            dac_bits: 8,
            adc_bits: 8,
            v_ref: 1.0,
        }
    }
}

impl ConverterSpec {
    pub fn with_bits(bits: u32) -> Self {
        Self {
            dac_bits: bits,
            adc_bits: bits,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=32).contains(&self.dac_bits) || !(1..=32).contains(&self.adc_bits) {
            return domain("converter resolution must be 1..=32 bits");
        }
        if !(self.v_ref.is_finite() && self.v_ref > 0.0) {
            return domain("v_ref must be positive");
        }
        Ok(())
    }

    pub fn dac_lsb(&self) -> f64 {
        lsb(self.dac_bits, self.v_ref)
    }

    pub fn adc_lsb(&self) -> f64 {
        lsb(self.adc_bits, self.v_ref)
    }

    /// Largest positive DAC output voltage.
    pub fn dac_max(&self) -> f64 {
        self.v_ref - self.dac_lsb()
    }
}

fn lsb(bits: u32, v_ref: f64) -> f64 {
    2.0 * v_ref / 2f64.powi(bits as i32)
}

fn top(bits: u32) -> u64 {
    (1u64 << bits) - 1
}

fn to_code(v: f64, bits: u32, v_ref: f64) -> Result<u64> {
    if !v.is_finite() {
        return domain(format!("cannot convert non-finite voltage {v}"));
    }
    let c = ((v + v_ref) / lsb(bits, v_ref)).round_ties_even();
    Ok(c.clamp(0.0, top(bits) as f64) as u64)
}

fn from_code(code: u64, bits: u32, v_ref: f64) -> f64 {
    -v_ref + code as f64 * lsb(bits, v_ref)
}

pub fn dac(code: u64, spec: &ConverterSpec) -> Result<f64> {
    if code > top(spec.dac_bits) {
        return domain(format!(
            "DAC code {code} exceeds {}-bit range",
            spec.dac_bits
        ));
    }
    Ok(from_code(code, spec.dac_bits, spec.v_ref))
}

/// Nearest code, clamped at both ends of the range.
pub fn adc(v: f64, spec: &ConverterSpec) -> Result<u64> {
    to_code(v, spec.adc_bits, spec.v_ref)
}

/// DAC output for a requested voltage: nearest DAC code, then conversion.
pub fn dac_drive(v: f64, spec: &ConverterSpec) -> Result<f64> {
    let c = to_code(v, spec.dac_bits, spec.v_ref)?;
    Ok(from_code(c, spec.dac_bits, spec.v_ref))
}

/// ADC conversion followed by the digital value of the code (volts).
pub fn adc_readout(v: f64, spec: &ConverterSpec) -> Result<f64> {
    let c = adc(v, spec)?;
    Ok(from_code(c, spec.adc_bits, spec.v_ref))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let s = ConverterSpec::default();
        assert_eq!(dac(0, &s).unwrap(), -1.0);
        assert_eq!(dac(255, &s).unwrap(), 1.0 - 2.0 / 256.0);
        assert_eq!(dac(128, &s).unwrap(), 0.0);
        assert!(dac(256, &s).is_err());
    }

    #[test]
    fn exhaustive_round_trip() {
        let s = ConverterSpec::default();
        for c in 0..256 {
            assert_eq!(adc(dac(c, &s).unwrap(), &s).unwrap(), c);
        }
        let s12 = ConverterSpec {
            v_ref: 0.75,
            ..ConverterSpec::with_bits(12)
        };
        for c in 0..4096 {
            assert_eq!(adc(dac(c, &s12).unwrap(), &s12).unwrap(), c);
        }
    }

    #[test]
    fn over_range_clamps() {
        let s = ConverterSpec::default();
        assert_eq!(adc(2.0, &s).unwrap(), 255);
        assert_eq!(adc(-5.0, &s).unwrap(), 0);
        assert!(adc(f64::NAN, &s).is_err());
    }

    #[test]
    fn dac_of_adc_is_idempotent() {
        let s = ConverterSpec::default();
        for i in -300..300 {
            let v = f64::from(i) * 0.0071;
            let once = adc_readout(v, &s).unwrap();
            assert_eq!(adc_readout(once, &s).unwrap(), once);
        }
    }
}
