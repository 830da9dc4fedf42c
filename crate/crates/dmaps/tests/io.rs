use dmaps::io::{parse_points, read_table, KernelCache, Provenance, StoredTable, Table};
use dmaps_core::density::DensityModel;
use dmaps_core::kernel::{KernelMatrix, KernelMode};

#[test]
fn points_parse_with_comments_and_blanks() {
    let p = parse_points("# x,y\n0.1, 0.2\n\n0.3,0.4\n".as_bytes()).unwrap();
    assert_eq!(p.dim, 2);
    assert_eq!(p.values, vec![0.1, 0.2, 0.3, 0.4]);
    assert_eq!(p.len(), 2);
}

#[test]
fn malformed_points_are_rejected() {
    let ragged = parse_points("0.1,0.2\n0.3\n".as_bytes()).unwrap_err();
    assert!(format!("{ragged:#}").contains("row 2 has 1 columns"));
    let text = parse_points("0.1\nabc\n".as_bytes()).unwrap_err();
    assert!(format!("{text:#}").contains("`abc`"));
    assert!(parse_points("1.0\nNaN\n".as_bytes()).is_err());
    assert!(parse_points("".as_bytes()).is_err());
}

#[test]
fn tables_carry_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    let mut t = Table::new(&["a", "b"]);
    t.push(vec!["1".into(), "0.1".into()]);
    t.push(vec!["2".into(), String::new()]);
    t.write(&path, &Provenance::new("abc".into(), 9)).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(&format!("# tool=dmaps {},config_sha256=abc,seed=9\n", env!("CARGO_PKG_VERSION"))));
    let StoredTable { provenance: prov, header, rows } = read_table(&path).unwrap();
    assert_eq!(prov.len(), 3);
    assert_eq!(header, vec!["a", "b"]);
    assert_eq!(rows, vec![vec!["1", "0.1"], vec!["2", ""]]);
}

#[test]
fn kernel_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let model = DensityModel::lacunary_benchmark();
    let s = model.sample(120, 3).unwrap();
    let eps = 0.01;
    let mode = KernelMode::periodic(*model.domain(), eps);
    let cache = KernelCache::new(dir.path());
    let (a, hit_a) = cache.get_or_build(&s, eps, mode).unwrap();
    let (b, hit_b) = cache.get_or_build(&s, eps, mode).unwrap();
    assert!(!hit_a && hit_b);
    assert_eq!(a.entries(), b.entries());
    assert_eq!(a.entries(), KernelMatrix::build(&s, eps, mode).unwrap().entries());
    // a different bandwidth is a different key
    let (_, hit_c) = cache.get_or_build(&s, 0.02, KernelMode::periodic(*model.domain(), 0.02)).unwrap();
    assert!(!hit_c);
    assert_ne!(KernelCache::key(&s, eps, &mode), KernelCache::key(&s, eps, &KernelMode::euclidean(1)));
}

#[test]
fn corrupt_cache_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let s = DensityModel::lacunary_benchmark().sample(10, 1).unwrap();
    let mode = KernelMode::euclidean(1);
    let key = KernelCache::key(&s, 0.1, &mode);
    std::fs::write(dir.path().join(format!("{key}.kernel")), b"garbage").unwrap();
    assert!(KernelCache::new(dir.path()).get_or_build(&s, 0.1, mode).is_err());
}
