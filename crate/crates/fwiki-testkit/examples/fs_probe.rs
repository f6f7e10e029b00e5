use std::time::Instant;

fn bench(dir: &std::path::Path) {
    let t = Instant::now();
    for i in 0..500 {
        std::fs::write(dir.join(format!("f{i}")), b"0123456789").unwrap();
    }
    let w = t.elapsed();
    let t = Instant::now();
    for i in 0..500 {
        let _ = std::fs::read(dir.join(format!("f{i}"))).unwrap();
    }
    let r = t.elapsed();
    let t = Instant::now();
    for i in 0..500 {
        let _ = std::fs::metadata(dir.join(format!("f{i}"))).unwrap();
    }
    let s = t.elapsed();
    eprintln!("{}: 500 writes {w:?}, reads {r:?}, stats {s:?}", dir.display());
    for i in 0..500 {
        let _ = std::fs::remove_file(dir.join(format!("f{i}")));
    }
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    bench(tmp.path());
    let shm = tempfile::tempdir_in("/dev/shm").unwrap();
    bench(shm.path());
}
