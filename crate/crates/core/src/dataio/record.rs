use std::fmt;
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

/// Header written by [`write_csv`]; [`load_csv`] accepts any column order.
pub const CSV_HEADER: [&str; 10] = [
    "srcip",
    "sport",
    "dstip",
    "dsport",
    "protocol_m",
    "sttl",
    "total_len",
    "payload",
    "stime",
    "label",
];

const REQUIRED: [&str; 9] = [
    "srcip",
    "sport",
    "dstip",
    "dsport",
    "protocol_m",
    "sttl",
    "total_len",
    "payload",
    "label",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
    Other,
}

impl Protocol {
    pub const ALL: [Protocol; 4] = [Protocol::Tcp, Protocol::Udp, Protocol::Icmp, Protocol::Other];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Parses names (`tcp`, `UDP`, ...) or IANA numbers. `strict` rejects
    /// anything unrecognised instead of mapping it to [`Protocol::Other`].
    pub fn parse(s: &str, strict: bool) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tcp" | "6" => Ok(Protocol::Tcp),
            "udp" | "17" => Ok(Protocol::Udp),
            "icmp" | "1" => Ok(Protocol::Icmp),
            "other" => Ok(Protocol::Other),
            _ if !strict => Ok(Protocol::Other),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Tcp => "tcp",
            Protocol::Udp => "udp",
            Protocol::Icmp => "icmp",
            Protocol::Other => "other",
        })
    }
}

/// One packet row. The send time column is never retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub srcip: Ipv4Addr,
    pub sport: u16,
    pub dstip: Ipv4Addr,
    pub dsport: u16,
    pub protocol: Protocol,
    pub sttl: u32,
    pub total_len: u32,
    pub payload: Vec<u8>,
    pub label: String,
}

fn field<T: FromStr>(name: &str, raw: &str) -> std::result::Result<T, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("bad {name} `{raw}`"))
}

/// Decodes a hex payload. Lenient mode drops a trailing odd nibble and
/// treats undecodable text as an empty payload.
pub fn parse_payload(raw: &str, strict: bool) -> std::result::Result<Vec<u8>, String> {
    let s = raw.trim();
    let s = s.strip_prefix("0x").unwrap_or(s);
    match hex::decode(s) {
        Ok(v) => Ok(v),
        Err(e) if strict => Err(format!("payload is not hex: {e}")),
        Err(_) => {
            let even = &s[..s.len() & !1];
            Ok(hex::decode(even).unwrap_or_default())
        }
    }
}

/// Loads ACI-style packet rows. Errors carry the 1-based data row number.
pub fn load_csv(path: &Path, strict: bool) -> Result<Vec<PacketRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, strict)
}

pub fn read_csv<R: std::io::Read>(reader: R, strict: bool) -> Result<Vec<PacketRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = col(name).ok_or_else(|| Error::Record {
            row: 0,
            reason: format!("missing required column `{name}`"),
        })?;
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| Error::Record {
            row: row_no,
            reason: e.to_string(),
        })?;
        let get = |k: usize| row.get(idx[k]).unwrap_or("");
        let parsed = (|| -> std::result::Result<PacketRecord, String> {
            Ok(PacketRecord {
                srcip: field("srcip", get(0))?,
                sport: field("sport", get(1))?,
                dstip: field("dstip", get(2))?,
                dsport: field("dsport", get(3))?,
                protocol: Protocol::parse(get(4), strict)?,
                sttl: field("sttl", get(5))?,
                total_len: field("total_len", get(6))?,
                payload: parse_payload(get(7), strict)?,
                label: get(8).trim().to_string(),
            })
        })();
        out.push(parsed.map_err(|reason| Error::Record {
            row: row_no,
            reason,
        })?);
    }
    Ok(out)
}

/// Writes rows with [`CSV_HEADER`]; the send time column is left empty.
pub fn write_csv<W: std::io::Write>(writer: W, records: &[PacketRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.srcip.to_string(),
            r.sport.to_string(),
            r.dstip.to_string(),
            r.dsport.to_string(),
            r.protocol.to_string(),
            r.sttl.to_string(),
            r.total_len.to_string(),
            hex::encode(&r.payload),
            String::new(),
            r.label.clone(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn save_csv(path: &Path, records: &[PacketRecord]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(std::io::BufWriter::new(f), records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "srcip,sport,dstip,dsport,protocol_m,sttl,total_len,payload,stime,label
192.168.1.10,5353,10.0.0.1,53,udp,64,80,0a0b0c,1690000000.5,DNS Flood
10.0.0.2,443,192.168.1.10,51000,TCP,128,60,,1690000001.0,Benign
";

    #[test]
    fn loads_well_formed_rows_and_drops_stime() {
        let recs = read_csv(GOOD.as_bytes(), true).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].payload, vec![0x0a, 0x0b, 0x0c]);
        assert_eq!(recs[1].protocol, Protocol::Tcp);
        assert!(recs[1].payload.is_empty());
    }

    #[test]
    fn stime_column_is_optional() {
        let csv = "label,srcip,sport,dstip,dsport,protocol_m,sttl,total_len,payload
Benign,1.2.3.4,1,5.6.7.8,2,icmp,1,2,ff
";
        let recs = read_csv(csv.as_bytes(), true).unwrap();
        assert_eq!(recs[0].protocol, Protocol::Icmp);
        assert_eq!(recs[0].label, "Benign");
    }

    #[test]
    fn non_hex_payload_names_the_row() {
        let bad = GOOD.replace(",,1690000001.0", ",zz,1690000001.0");
        let err = read_csv(bad.as_bytes(), true).unwrap_err();
        assert!(matches!(err, Error::Record { row: 2, .. }), "{err}");
        let lenient = read_csv(bad.as_bytes(), false).unwrap();
        assert!(lenient[1].payload.is_empty());
    }

    #[test]
    fn missing_column_reported() {
        let csv = "srcip,sport,dstip,dsport,sttl,total_len,payload,label\n";
        let err = read_csv(csv.as_bytes(), true).unwrap_err();
        assert!(err.to_string().contains("protocol_m"), "{err}");
    }

    #[test]
    fn protocol_strictness() {
        assert!(Protocol::parse("gre", true).is_err());
        assert_eq!(Protocol::parse("gre", false), Ok(Protocol::Other));
        assert!(read_csv(GOOD.replace("udp", "sctp").as_bytes(), true).is_err());
        let bad_ip = GOOD.replace("192.168.1.10,5353", "192.168.1.300,5353");
        assert!(read_csv(bad_ip.as_bytes(), false).is_err());
    }

    #[test]
    fn write_then_read() {
        let recs = read_csv(GOOD.as_bytes(), true).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &recs).unwrap();
        assert_eq!(read_csv(buf.as_slice(), true).unwrap(), recs);
    }
}
