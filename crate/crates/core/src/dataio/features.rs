use super::record::{PacketRecord, Protocol};

/// Payload bytes kept per record.
pub const PAYLOAD_BYTES: usize = 1500;
/// 4 + 1 + 4 + 1 + 4 + 1 + 1 + 1500.
pub const FEATURE_WIDTH: usize = 1515;

pub const SRCIP_OFFSET: usize = 0;
pub const SPORT_OFFSET: usize = 4;
pub const DSTIP_OFFSET: usize = 5;
pub const DSPORT_OFFSET: usize = 9;
pub const PROTOCOL_OFFSET: usize = 10;
pub const STTL_OFFSET: usize = 14;
pub const TOTAL_LEN_OFFSET: usize = 15;
pub const PAYLOAD_OFFSET: usize = 16;

/// How raw integer fields map onto reals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureScaling {
    /// Raw integer values.
    #[default]
    Raw,
    /// Each field divided by its maximum representable value.
    Unit,
}

impl std::str::FromStr for FeatureScaling {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "raw" | "none" => Ok(Self::Raw),
            "unit" => Ok(Self::Unit),
            _ => Err(format!("expected raw|unit, got `{s}`")),
        }
    }
}

impl std::fmt::Display for FeatureScaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Raw => "raw",
            Self::Unit => "unit",
        })
    }
}

/// Fixed-width numeric encoding of one record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }
}

pub fn featurize(record: &PacketRecord) -> FeatureVector {
    featurize_scaled(record, FeatureScaling::Raw)
}

pub fn featurize_scaled(record: &PacketRecord, scaling: FeatureScaling) -> FeatureVector {
    let mut v = vec![0.0f32; FEATURE_WIDTH];
    write_features(record, scaling, &mut v);
    FeatureVector(v)
}

/// Writes the encoding into a `FEATURE_WIDTH` slice.
pub fn write_features(record: &PacketRecord, scaling: FeatureScaling, out: &mut [f32]) {
    assert_eq!(out.len(), FEATURE_WIDTH);
    let (byte, port, ttl, len) = match scaling {
        FeatureScaling::Raw => (1.0, 1.0, 1.0, 1.0),
        FeatureScaling::Unit => (255.0, 65535.0, 255.0, 65535.0),
    };
    for (i, o) in record.srcip.octets().iter().enumerate() {
        out[SRCIP_OFFSET + i] = *o as f32 / byte;
    }
    out[SPORT_OFFSET] = record.sport as f32 / port;
    for (i, o) in record.dstip.octets().iter().enumerate() {
        out[DSTIP_OFFSET + i] = *o as f32 / byte;
    }
    out[DSPORT_OFFSET] = record.dsport as f32 / port;
    for p in Protocol::ALL {
        out[PROTOCOL_OFFSET + p.index()] = if p == record.protocol { 1.0 } else { 0.0 };
    }
    out[STTL_OFFSET] = record.sttl as f32 / ttl;
    out[TOTAL_LEN_OFFSET] = record.total_len as f32 / len;
    let payload = &mut out[PAYLOAD_OFFSET..];
    payload.fill(0.0);
    for (o, b) in payload.iter_mut().zip(record.payload.iter().take(PAYLOAD_BYTES)) {
        *o = *b as f32 / byte;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::net::Ipv4Addr;

    fn record(payload: Vec<u8>, protocol: Protocol) -> PacketRecord {
        PacketRecord {
            srcip: Ipv4Addr::new(192, 168, 1, 10),
            sport: 1234,
            dstip: Ipv4Addr::new(10, 0, 0, 1),
            dsport: 53,
            protocol,
            sttl: 64,
            total_len: 99,
            payload,
            label: "Benign".into(),
        }
    }

    #[test]
    fn layout() {
        let f = featurize(&record(vec![1, 2, 3], Protocol::Udp));
        let v = f.as_slice();
        assert_eq!(v.len(), FEATURE_WIDTH);
        assert_eq!(&v[..4], &[192.0, 168.0, 1.0, 10.0]);
        assert_eq!(v[SPORT_OFFSET], 1234.0);
        assert_eq!(&v[DSTIP_OFFSET..DSTIP_OFFSET + 4], &[10.0, 0.0, 0.0, 1.0]);
        assert_eq!(v[DSPORT_OFFSET], 53.0);
        assert_eq!(&v[PROTOCOL_OFFSET..PROTOCOL_OFFSET + 4], &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(v[STTL_OFFSET], 64.0);
        assert_eq!(v[TOTAL_LEN_OFFSET], 99.0);
        assert_eq!(&v[PAYLOAD_OFFSET..PAYLOAD_OFFSET + 4], &[1.0, 2.0, 3.0, 0.0]);
        assert!(v[PAYLOAD_OFFSET + 3..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn long_payload_truncated() {
        let f = featurize(&record(vec![7; 2000], Protocol::Tcp));
        assert_eq!(f.len(), FEATURE_WIDTH);
        assert!(f.as_slice()[PAYLOAD_OFFSET..].iter().all(|&x| x == 7.0));
    }

    #[test]
    fn unit_scaling_bounds() {
        let f = featurize_scaled(&record(vec![255; 10], Protocol::Icmp), FeatureScaling::Unit);
        assert!(f.as_slice().iter().all(|&x| (0.0..=1.0).contains(&x)));
        assert_eq!(f.as_slice()[PAYLOAD_OFFSET], 1.0);
    }

    proptest! {
        #[test]
        fn width_stable_and_one_hot(
            payload in proptest::collection::vec(any::<u8>(), 0..1700),
            proto in 0usize..4, sport: u16, dsport: u16, a: [u8; 4], b: [u8; 4],
        ) {
            let mut r = record(payload, Protocol::ALL[proto]);
            r.sport = sport;
            r.dsport = dsport;
            r.srcip = a.into();
            r.dstip = b.into();
            let f = featurize(&r);
            prop_assert_eq!(f.len(), FEATURE_WIDTH);
            let one_hot: f32 = f.as_slice()[PROTOCOL_OFFSET..PROTOCOL_OFFSET + 4].iter().sum();
            prop_assert_eq!(one_hot, 1.0);
            prop_assert!(f.as_slice()[PAYLOAD_OFFSET..].iter().all(|&x| (0.0..=255.0).contains(&x)));
        }
    }
}
