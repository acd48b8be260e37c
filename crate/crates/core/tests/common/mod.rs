#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synchro::model::{SystemBuilder, SystemSpec};

pub const PAYLOADS: [&str; 2] = ["a", "b"];

/// A random system with 2 or 3 processes, at most 4 states each and at
/// most 2 payloads. Processes never send to themselves.
pub fn random_system(rng: &mut impl Rng) -> SystemSpec {
    let nprocs = rng.gen_range(2..=3);
    let npayloads = rng.gen_range(1..=2);
    let names: Vec<String> = (0..nprocs).map(|i| format!("p{}", i)).collect();
    let mut b = SystemBuilder::new("random").payloads(PAYLOADS[..npayloads].iter().copied());
    for (i, name) in names.iter().enumerate() {
        let nstates = rng.gen_range(1..=4);
        b = b.process(name.as_str(), "s0");
        for s in 0..nstates {
            b = b.state(format!("s{}", s));
        }
        for s in 0..nstates {
            let from = format!("s{}", s);
            for _ in 0..rng.gen_range(1..=2) {
                let to = format!("s{}", rng.gen_range(0..nstates));
                let v = PAYLOADS[rng.gen_range(0..npayloads)];
                if rng.gen_bool(0.5) {
                    let mut d = rng.gen_range(0..nprocs - 1);
                    if d >= i {
                        d += 1;
                    }
                    b = b.send(from.as_str(), v, names[d].as_str(), to);
                } else {
                    b = b.recv(from.as_str(), v, to);
                }
            }
        }
    }
    b.build().expect("random system is well formed")
}

pub fn corpus(seed: u64, n: usize) -> Vec<SystemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| random_system(&mut rng)).collect()
}

pub fn models_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

pub fn model_path(file: &str) -> std::path::PathBuf {
    models_dir().join(file)
}

pub fn read_model(file: &str) -> String {
    std::fs::read_to_string(model_path(file)).expect("bundled model")
}
