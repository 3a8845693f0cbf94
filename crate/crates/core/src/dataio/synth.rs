//! Desk-scale stand-in for the ACI IoT corpus.
//!
//! Each raw class has its own port pattern, protocol mix, TTL band, payload
//! length band and a byte motif written at a random offset, buried in noise.
//! Grouped classes draw uniformly from their member profiles.

use std::net::Ipv4Addr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::classes::{ClassScheme, RAW_CLASSES};
use super::record::{PacketRecord, Protocol};

struct Profile {
    protocols: &'static [Protocol],
    dports: &'static [u16],
    random_dport: bool,
    ttl: (u32, u32),
    payload_len: (usize, usize),
    motif: &'static [u8],
    attacker: bool,
}

const PROFILES: [Profile; 10] = [
    // Benign
    Profile {
        protocols: &[Protocol::Tcp, Protocol::Udp, Protocol::Tcp],
        dports: &[443, 80, 8883],
        random_dport: false,
        ttl: (60, 64),
        payload_len: (100, 900),
        motif: b"\x17\x03\x03",
        attacker: false,
    },
    // DNS Flood
    Profile {
        protocols: &[Protocol::Udp],
        dports: &[53],
        random_dport: false,
        ttl: (110, 128),
        payload_len: (28, 60),
        motif: b"\x01\x00\x00\x01\x00\x00\x00\x00\x00\x00\x03www",
        attacker: true,
    },
    // Dictionary Attack
    Profile {
        protocols: &[Protocol::Tcp],
        dports: &[22, 23],
        random_dport: false,
        ttl: (40, 50),
        payload_len: (40, 120),
        motif: b"login: admin password: ",
        attacker: true,
    },
    // Slowloris
    Profile {
        protocols: &[Protocol::Tcp],
        dports: &[80],
        random_dport: false,
        ttl: (200, 255),
        payload_len: (20, 60),
        motif: b"X-a: b\r\nKeep-Alive: 900",
        attacker: true,
    },
    // SYN Flood
    Profile {
        protocols: &[Protocol::Tcp],
        dports: &[80, 443],
        random_dport: false,
        ttl: (240, 255),
        payload_len: (0, 0),
        motif: b"",
        attacker: true,
    },
    // Port Scan
    Profile {
        protocols: &[Protocol::Tcp],
        dports: &[],
        random_dport: true,
        ttl: (36, 40),
        payload_len: (0, 0),
        motif: b"",
        attacker: true,
    },
    // Vulnerability Scan
    Profile {
        protocols: &[Protocol::Tcp],
        dports: &[80, 8080, 443],
        random_dport: false,
        ttl: (90, 100),
        payload_len: (60, 300),
        motif: b"GET /cgi-bin/../../etc/passwd",
        attacker: true,
    },
    // OS Scan
    Profile {
        protocols: &[Protocol::Tcp, Protocol::Icmp, Protocol::Udp],
        dports: &[1, 7, 31337],
        random_dport: false,
        ttl: (150, 160),
        payload_len: (0, 16),
        motif: b"\xa5\xa5\xa5",
        attacker: true,
    },
    // UDP Flood
    Profile {
        protocols: &[Protocol::Udp],
        dports: &[],
        random_dport: true,
        ttl: (170, 180),
        payload_len: (600, 1400),
        motif: b"\xff\xfe\xfd\xfc",
        attacker: true,
    },
    // ICMP Flood
    Profile {
        protocols: &[Protocol::Icmp],
        dports: &[0],
        random_dport: false,
        ttl: (10, 20),
        payload_len: (56, 56),
        motif: b"\x08\x00abcdefghijklmnop",
        attacker: true,
    },
];

/// Raw classes drawn for grouped class `g`.
fn members(scheme: ClassScheme, class: usize) -> Vec<usize> {
    match scheme {
        ClassScheme::Full10 => vec![class],
        ClassScheme::Grouped5 => match class {
            0 => vec![0],
            1 => vec![1, 4, 8, 9],
            2 => vec![2],
            3 => vec![3],
            _ => vec![5, 6, 7],
        },
    }
}

fn generate(raw: usize, label: &str, rng: &mut ChaCha8Rng) -> PacketRecord {
    let p = &PROFILES[raw];
    let protocol = p.protocols[rng.gen_range(0..p.protocols.len())];
    let dsport = if p.random_dport || p.dports.is_empty() {
        rng.gen_range(1..=65535)
    } else {
        p.dports[rng.gen_range(0..p.dports.len())]
    };
    let len = rng.gen_range(p.payload_len.0..=p.payload_len.1);
    let mut payload: Vec<u8> = (0..len).map(|_| rng.gen()).collect();
    if !p.motif.is_empty() && len >= p.motif.len() {
        // Motif near the start with a little jitter.
        let slack = (len - p.motif.len()).min(8);
        let at = rng.gen_range(0..=slack);
        payload[at..at + p.motif.len()].copy_from_slice(p.motif);
    }
    let lan = Ipv4Addr::new(192, 168, 1, rng.gen_range(2..=250));
    let remote = if p.attacker {
        Ipv4Addr::new(192, 168, 1, rng.gen_range(2..=250))
    } else {
        Ipv4Addr::new(
            rng.gen_range(1..=223),
            rng.gen(),
            rng.gen(),
            rng.gen_range(1..=254),
        )
    };
    PacketRecord {
        srcip: remote,
        sport: rng.gen_range(1024..=65535),
        dstip: lan,
        dsport,
        protocol,
        sttl: rng.gen_range(p.ttl.0..=p.ttl.1),
        total_len: (len + 40) as u32,
        payload,
        label: label.to_string(),
    }
}

/// `n_per_class` records for every class of `scheme`, in class-major order.
pub fn synthesize_dataset(n_per_class: usize, scheme: ClassScheme, seed: u64) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_per_class * scheme.num_classes());
    for (class, label) in scheme.names().iter().enumerate() {
        let m = members(scheme, class);
        for _ in 0..n_per_class {
            let raw = m[rng.gen_range(0..m.len())];
            debug_assert!(raw < RAW_CLASSES.len());
            out.push(generate(raw, label, &mut rng));
        }
    }
    out
}
