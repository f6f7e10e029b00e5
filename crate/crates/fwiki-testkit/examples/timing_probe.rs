// quick probe: one sequence, print phase timings
use fwiki_testkit::*;
use std::time::Instant;

fn main() {
    let mut rng = Rng::new(1001);
    let size = 5 + rng.below(46);
    let mut lib = random_library(size, &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let seed = dir.path().join("seed");
    write_library(&lib, &seed).unwrap();
    let t = Instant::now();
    let (config, _) = fwiki_core::repo::init_repo(&fwiki_core::repo::InitOptions {
        central: dir.path().join("c"),
        frontend: dir.path().join("f"),
        publish: dir.path().join("p"),
        workers: 2,
        mirror: None,
        backend: fwiki_core::repo::BackendChoice::PlainDir,
        seed: Some(seed),
    }).unwrap();
    eprintln!("init ({size} articles): {:?}", t.elapsed());
    let backend = fwiki_core::repo::open_backend(&config).unwrap();
    for step in 0..10 {
        let request = random_request(&lib, &mut rng, step);
        let t = Instant::now();
        let result = fwiki_core::repo::submit(&config, backend.as_ref(), &request).unwrap();
        let total = t.elapsed();
        if result.verdict.is_accepted() { apply_request(&mut lib, &request); }
        let t2 = Instant::now();
        let _ = fwiki_core::repo::gate::verify_full_clean(&config).unwrap().state.to_canonical_json();
        eprintln!("step {step}: submit {total:?} oracle {:?} timings {:?}", t2.elapsed(), result.timings);
    }
}
