//! Threshold binarization and XOR extraction.
//!
//! Samples become raw bits by comparison against the acquisition mean; two
//! independent raw streams are then XORed together. For small biases
//! `eps_a`, `eps_b` of the inputs the output bias is `-2 * eps_a * eps_b`,
//! so the quadratic suppression turns percent-level imbalance into
//! parts-per-ten-thousand.

use crate::detection::SampleSeries;
use crate::error::{invalid, Error, Result};
use std::io::{Read, Write};

/// How a bit stream was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Thresholded samples straight off the detector.
    Raw,
    /// XOR of two raw streams.
    XorExtracted,
}

/// Packed bit stream. Bits are stored most-significant-bit first within each
/// byte; a final partial byte is zero-padded.
#[derive(Debug, Clone, PartialEq)]
pub struct BitStream {
    bytes: Vec<u8>,
    bit_len: usize,
    pub provenance: Provenance,
    /// Bits per second the stream was produced at, if known.
    pub generation_rate: Option<f64>,
}

impl BitStream {
    pub fn new(provenance: Provenance) -> Self {
        BitStream {
            bytes: Vec::new(),
            bit_len: 0,
            provenance,
            generation_rate: None,
        }
    }

    pub fn with_capacity(bits: usize, provenance: Provenance) -> Self {
        BitStream {
            bytes: Vec::with_capacity(bits.div_ceil(8)),
            bit_len: 0,
            provenance,
            generation_rate: None,
        }
    }

    /// Wraps packed bytes. Padding bits in the final byte must be zero.
    pub fn from_bytes(bytes: Vec<u8>, bit_len: usize, provenance: Provenance) -> Result<Self> {
        if bytes.len() != bit_len.div_ceil(8) {
            return Err(Error::LengthMismatch {
                context: "BitStream::from_bytes",
                left: bytes.len(),
                right: bit_len.div_ceil(8),
            });
        }
        let tail = bit_len % 8;
        if tail != 0 {
            let mask = 0xFFu8 >> tail;
            if bytes.last().copied().unwrap_or(0) & mask != 0 {
                return Err(invalid("padding bits in the final byte must be zero"));
            }
        }
        Ok(BitStream {
            bytes,
            bit_len,
            provenance,
            generation_rate: None,
        })
    }

    pub fn from_bits(bits: impl IntoIterator<Item = bool>, provenance: Provenance) -> Self {
        let mut stream = BitStream::new(provenance);
        for bit in bits {
            stream.push(bit);
        }
        stream
    }

    pub fn len(&self) -> usize {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    /// Packed bytes, MSB-first, final byte zero-padded.
    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn push(&mut self, bit: bool) {
        if self.bit_len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let byte = self.bit_len / 8;
            self.bytes[byte] |= 0x80 >> (self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    pub fn get(&self, index: usize) -> bool {
        assert!(
            index < self.bit_len,
            "bit index {index} out of range {}",
            self.bit_len
        );
        self.bytes[index / 8] & (0x80 >> (index % 8)) != 0
    }

    /// Unpacks into one byte per bit (0 or 1).
    pub fn unpack(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.bit_len);
        for (i, &byte) in self.bytes.iter().enumerate() {
            let bits_here = (self.bit_len - i * 8).min(8);
            for b in 0..bits_here {
                out.push((byte >> (7 - b)) & 1);
            }
        }
        out
    }

    pub fn count_ones(&self) -> usize {
        // Padding is maintained zero, so whole-byte popcounts are exact.
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn ones_fraction(&self) -> f64 {
        self.count_ones() as f64 / self.bit_len as f64
    }

    /// Signed deviation of P(1) from one half.
    pub fn bias(&self) -> f64 {
        self.ones_fraction() - 0.5
    }

    /// Appends thresholded samples: 1 when the value exceeds the threshold,
    /// 0 otherwise (ties count as 0).
    pub fn extend_from_samples(&mut self, values: &[f64], threshold: f64) {
        // Aligned fast path: assemble whole bytes branch-free.
        if self.bit_len.is_multiple_of(8) {
            let mut chunks = values.chunks_exact(8);
            self.bytes.reserve(values.len() / 8 + 1);
            for chunk in &mut chunks {
                let byte = (u8::from(chunk[0] > threshold) << 7)
                    | (u8::from(chunk[1] > threshold) << 6)
                    | (u8::from(chunk[2] > threshold) << 5)
                    | (u8::from(chunk[3] > threshold) << 4)
                    | (u8::from(chunk[4] > threshold) << 3)
                    | (u8::from(chunk[5] > threshold) << 2)
                    | (u8::from(chunk[6] > threshold) << 1)
                    | u8::from(chunk[7] > threshold);
                self.bytes.push(byte);
            }
            self.bit_len += values.len() - values.len() % 8;
            for &v in chunks.remainder() {
                self.push(v > threshold);
            }
        } else {
            for &v in values {
                self.push(v > threshold);
            }
        }
    }

    /// Appends another stream's bits. Provenance and rate of `self` are kept.
    pub fn append(&mut self, other: &BitStream) {
        if self.bit_len.is_multiple_of(8) {
            self.bytes.extend_from_slice(&other.bytes);
            self.bit_len += other.bit_len;
        } else {
            for i in 0..other.bit_len {
                self.push(other.get(i));
            }
        }
    }

    /// Writes the packed bytes. The format is header-free; callers persist
    /// the bit length and provenance in sidecar metadata.
    pub fn write_raw(&self, writer: &mut impl Write) -> Result<()> {
        writer.write_all(&self.bytes)?;
        Ok(())
    }

    /// Reads `bit_len` bits of packed data.
    pub fn read_raw(
        reader: &mut impl Read,
        bit_len: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        let mut bytes = vec![0u8; bit_len.div_ceil(8)];
        reader.read_exact(&mut bytes)?;
        BitStream::from_bytes(bytes, bit_len, provenance)
    }
}

/// Mean of the series, stored on it as the decision threshold.
pub fn mean_threshold(series: &mut SampleSeries) -> Result<f64> {
    if series.values.is_empty() {
        return Err(invalid("cannot take the mean of an empty series"));
    }
    let mean = series.values.iter().sum::<f64>() / series.values.len() as f64;
    if !mean.is_finite() {
        return Err(invalid("series mean is not finite"));
    }
    series.threshold = Some(mean);
    Ok(mean)
}

/// Thresholds a whole series into a raw bit stream.
pub fn binarize(series: &SampleSeries, threshold: f64) -> Result<BitStream> {
    if !threshold.is_finite() {
        return Err(invalid("threshold must be finite"));
    }
    let mut stream = BitStream::with_capacity(series.values.len(), Provenance::Raw);
    stream.extend_from_samples(&series.values, threshold);
    stream.generation_rate = Some(series.sample_rate());
    Ok(stream)
}

/// XORs two equal-length raw streams into one extracted stream.
///
/// Two raw bits are consumed per output bit, so the generation rate halves.
pub fn xor_combine(a: &BitStream, b: &BitStream) -> Result<BitStream> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            context: "xor_combine",
            left: a.len(),
            right: b.len(),
        });
    }
    let bytes: Vec<u8> = a.bytes.iter().zip(&b.bytes).map(|(&x, &y)| x ^ y).collect();
    let mut out = BitStream::from_bytes(bytes, a.bit_len, Provenance::XorExtracted)?;
    out.generation_rate = match (a.generation_rate, b.generation_rate) {
        (Some(ra), Some(rb)) => Some(ra.min(rb) / 2.0),
        _ => None,
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::{stream_rng, DOMAIN_NOISE};
    use rand::Rng;

    fn series_of(values: Vec<f64>) -> SampleSeries {
        SampleSeries {
            sampling_period: 1e-9,
            offset: 0.0,
            values,
            threshold: None,
        }
    }

    #[test]
    fn packing_is_msb_first() {
        let stream = BitStream::from_bits(
            [true, false, true, true, false, false, false, true, true],
            Provenance::Raw,
        );
        assert_eq!(stream.bytes(), &[0b1011_0001, 0b1000_0000]);
        assert_eq!(stream.len(), 9);
    }

    #[test]
    fn unpack_round_trips() {
        let bits = [
            true, true, false, true, false, false, true, false, false, true, true,
        ];
        let stream = BitStream::from_bits(bits, Provenance::Raw);
        let unpacked = stream.unpack();
        assert_eq!(unpacked.len(), bits.len());
        assert!(bits.iter().zip(&unpacked).all(|(&b, &u)| u == u8::from(b)));
    }

    #[test]
    fn nonzero_padding_is_rejected() {
        assert!(BitStream::from_bytes(vec![0xFF], 5, Provenance::Raw).is_err());
        assert!(BitStream::from_bytes(vec![0xF8], 5, Provenance::Raw).is_ok());
    }

    #[test]
    fn mean_threshold_finds_the_dc_level() {
        // Symmetric signal around 0.5: the mean recovers the level within
        // 3 sigma of the standard error.
        let mut rng = stream_rng(1, DOMAIN_NOISE, 0, 0);
        let n = 100_000;
        let values: Vec<f64> = (0..n).map(|_| 0.5 + (rng.gen::<f64>() - 0.5)).collect();
        let sigma = (1.0f64 / 12.0).sqrt() / (n as f64).sqrt();
        let mut series = series_of(values);
        let t = mean_threshold(&mut series).unwrap();
        assert_eq!(series.threshold, Some(t));
        assert!((t - 0.5).abs() < 3.0 * sigma, "threshold {t}");
    }

    #[test]
    fn binarize_splits_around_the_threshold() {
        let series = series_of(vec![0.1, 0.9, 0.5, 0.4999, 0.5001, -3.0]);
        let bits = binarize(&series, 0.5).unwrap();
        assert_eq!(bits.unpack(), vec![0, 1, 0, 0, 1, 0]);
        assert_eq!(bits.provenance, Provenance::Raw);
        let rate = bits.generation_rate.unwrap();
        assert!((rate - 1e9).abs() < 1.0, "rate {rate}");
    }

    #[test]
    fn ties_become_zero() {
        let series = series_of(vec![0.5; 17]);
        let bits = binarize(&series, 0.5).unwrap();
        assert_eq!(bits.count_ones(), 0);
        assert_eq!(bits.len(), 17);
    }

    #[test]
    fn binarize_is_invariant_under_monotone_rescaling() {
        // Exact power-of-two affine maps preserve comparisons bit for bit.
        let mut rng = stream_rng(2, DOMAIN_NOISE, 0, 0);
        let values: Vec<f64> = (0..10_000).map(|_| rng.gen::<f64>()).collect();
        let series = series_of(values.clone());
        let baseline = binarize(&series, 0.5).unwrap();
        let scaled = series_of(values.iter().map(|v| v * 4.0 + 2.0).collect());
        let transformed = binarize(&scaled, 0.5 * 4.0 + 2.0).unwrap();
        assert_eq!(baseline.bytes(), transformed.bytes());
    }

    #[test]
    fn xor_of_identical_streams_is_zero() {
        let mut rng = stream_rng(3, DOMAIN_NOISE, 0, 0);
        let bits: Vec<bool> = (0..1000).map(|_| rng.gen::<bool>()).collect();
        let a = BitStream::from_bits(bits.clone(), Provenance::Raw);
        let b = BitStream::from_bits(bits, Provenance::Raw);
        let x = xor_combine(&a, &b).unwrap();
        assert_eq!(x.count_ones(), 0);
        assert_eq!(x.provenance, Provenance::XorExtracted);
    }

    #[test]
    fn xor_involution_recovers_the_input() {
        let mut rng = stream_rng(4, DOMAIN_NOISE, 0, 0);
        let a = BitStream::from_bits((0..777).map(|_| rng.gen::<bool>()), Provenance::Raw);
        let b = BitStream::from_bits((0..777).map(|_| rng.gen::<bool>()), Provenance::Raw);
        let x = xor_combine(&a, &b).unwrap();
        let back = xor_combine(&x, &b).unwrap();
        assert_eq!(back.bytes(), a.bytes());
    }

    #[test]
    fn xor_halves_the_rate() {
        let mut a = BitStream::from_bits([true, false, true, false], Provenance::Raw);
        let mut b = BitStream::from_bits([true, true, false, false], Provenance::Raw);
        a.generation_rate = Some(1e9);
        b.generation_rate = Some(1e9);
        let x = xor_combine(&a, &b).unwrap();
        assert_eq!(x.generation_rate, Some(0.5e9));
        assert_eq!(x.unpack(), vec![0, 1, 1, 0]);
    }

    #[test]
    fn xor_rejects_length_mismatch() {
        let a = BitStream::from_bits([true; 8], Provenance::Raw);
        let b = BitStream::from_bits([true; 9], Provenance::Raw);
        assert!(matches!(
            xor_combine(&a, &b),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn chunked_extension_matches_one_shot() {
        let mut rng = stream_rng(5, DOMAIN_NOISE, 0, 0);
        let values: Vec<f64> = (0..10_007).map(|_| rng.gen::<f64>()).collect();
        let mut one_shot = BitStream::new(Provenance::Raw);
        one_shot.extend_from_samples(&values, 0.5);
        let mut chunked = BitStream::new(Provenance::Raw);
        for chunk in values.chunks(923) {
            chunked.extend_from_samples(chunk, 0.5);
        }
        assert_eq!(one_shot.bytes(), chunked.bytes());
        assert_eq!(one_shot.len(), chunked.len());
    }

    #[test]
    fn append_handles_both_alignments() {
        let mut rng = stream_rng(7, DOMAIN_NOISE, 0, 0);
        let first: Vec<bool> = (0..29).map(|_| rng.gen()).collect();
        let second: Vec<bool> = (0..40).map(|_| rng.gen()).collect();
        let mut joined = BitStream::from_bits(first.iter().copied(), Provenance::Raw);
        joined.append(&BitStream::from_bits(
            second.iter().copied(),
            Provenance::Raw,
        ));
        let expected = BitStream::from_bits(first.into_iter().chain(second), Provenance::Raw);
        assert_eq!(joined.bytes(), expected.bytes());
        assert_eq!(joined.len(), expected.len());

        let mut aligned = BitStream::from_bits((0..16).map(|i| i % 3 == 0), Provenance::Raw);
        let tail = BitStream::from_bits((0..5).map(|i| i % 2 == 0), Provenance::Raw);
        aligned.append(&tail);
        assert_eq!(aligned.len(), 21);
        assert_eq!(aligned.unpack()[16..], tail.unpack()[..]);
    }

    #[test]
    fn raw_file_round_trip() {
        let mut rng = stream_rng(6, DOMAIN_NOISE, 0, 0);
        let stream = BitStream::from_bits((0..4001).map(|_| rng.gen::<bool>()), Provenance::Raw);
        let mut buf = Vec::new();
        stream.write_raw(&mut buf).unwrap();
        assert_eq!(buf.len(), 4001usize.div_ceil(8));
        let back = BitStream::read_raw(&mut buf.as_slice(), 4001, Provenance::Raw).unwrap();
        assert_eq!(back.bytes(), stream.bytes());
        assert_eq!(back.len(), stream.len());
    }
}
