use modspace::harness::{records_to_csv, run_oracle_sweep, standard_families, LatticeSetup, Outcome, SweepReport};
use modspace::{rat, ExtendedExponent, INF};

fn small_oracle_sweep() -> SweepReport {
    let one = ExtendedExponent::one();
    let two = ExtendedExponent::two();
    run_oracle_sweep(LatticeSetup::default(), &standard_families(), 8, &[rat(0, 1), rat(3, 2)], &[one, INF], &[two])
        .unwrap()
}

#[test]
fn canonical_reports_are_reproducible() {
    let a = small_oracle_sweep().canonical().to_json();
    let b = small_oracle_sweep().canonical().to_json();
    assert_eq!(a, b);
}

#[test]
fn reports_survive_serialization() {
    let report = small_oracle_sweep().canonical();
    assert_eq!(report.outcome, Outcome::Pass);
    let back: SweepReport = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());

    let csv = records_to_csv(&report.records).unwrap();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let width = reader.headers().unwrap().len();
    let rows: Vec<_> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), report.records.len());
    assert!(rows.iter().all(|r| r.len() == width));
}
