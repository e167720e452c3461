//! The CSV and JSON layouts read by the plotting scripts.

use bounded_sde::convergence::{
    convergence_json, generate_lattice, local_error_probe, probe_json, rmse_experiment, write_convergence_csv,
    write_json, write_probe_csv, write_trajectory_csv, Experiment, Probe, SPEC_VERSION,
};
use bounded_sde::integrators::simulate_path;
use bounded_sde::models::{ModelInstance, ModelName};
use bounded_sde::{Scheme, SchemeConfig, TimeGrid};

fn read_csv(bytes: &[u8]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(bytes);
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn convergence_csv_and_json() {
    let inst = ModelInstance::get(ModelName::Exact1);
    let mut exp = Experiment::for_instance(
        &inst,
        SchemeConfig::new(Scheme::EmWeighted),
        vec![0.25, 0.125, 0.0625],
        4,
    );
    exp.realizations = 40;
    let report = rmse_experiment(&exp).unwrap();

    let mut buf = Vec::new();
    write_convergence_csv(&report, &mut buf).unwrap();
    let (header, rows) = read_csv(&buf);
    assert_eq!(header, ["dt", "rmse", "stderr", "realizations"]);
    assert_eq!(rows.len(), 3);
    for (k, row) in rows.iter().enumerate() {
        assert_eq!(row[0].parse::<f64>().unwrap(), report.dt_list[k]);
        assert_eq!(row[1].parse::<f64>().unwrap().to_bits(), report.rmse_list[k].to_bits());
        assert_eq!(
            row[2].parse::<f64>().unwrap().to_bits(),
            report.stderr_list[k].to_bits()
        );
        assert_eq!(row[3], "40");
    }

    let json = convergence_json(&report).unwrap();
    assert_eq!(json["spec_version"], SPEC_VERSION);
    assert_eq!(json["kind"], "convergence");
    assert_eq!(json["scheme"], "em-weighted");
    assert_eq!(json["seed"], 4);
    assert_eq!(json["reference"], "exact");
    assert_eq!(json["fitted_order"].as_f64().unwrap(), report.fitted_order);
    assert_eq!(json["config"]["theta_fixed"], 0.5);
    let mut text = Vec::new();
    write_json(&json, &mut text).unwrap();
    let back: serde_json::Value = serde_json::from_slice(&text).unwrap();
    assert_eq!(back, json);
}

#[test]
fn probe_csv_layout() {
    let inst = ModelInstance::get(ModelName::Exact1);
    let mut probe = Probe::new(
        &inst.model,
        SchemeConfig::new(Scheme::EmMean),
        vec![0.5],
        vec![0.125, 0.0625],
    );
    probe.realizations = 10;
    probe.substeps = 50;
    let report = local_error_probe(&probe).unwrap();
    let mut buf = Vec::new();
    write_probe_csv(&report, &mut buf).unwrap();
    let (header, rows) = read_csv(&buf);
    assert_eq!(header, ["dt", "mse", "stderr", "realizations"]);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 0.125);
    let json = probe_json(&report).unwrap();
    assert_eq!(json["kind"], "probe");
    assert!(json["exponent"].is_number());
}

#[test]
fn trajectory_csv_layout() {
    let inst = ModelInstance::get(ModelName::Nagumo4);
    let grid = TimeGrid::new(0.25, 8).unwrap();
    let lat = generate_lattice(inst.model.dim(), &grid, 1, 0);
    let traj = simulate_path(
        &inst.model,
        &SchemeConfig::new(Scheme::EmMean),
        &inst.y0,
        &grid,
        lat.as_slice(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_trajectory_csv(&traj, &mut buf).unwrap();
    let (header, rows) = read_csv(&buf);
    assert_eq!(header.len(), 1 + 2 * 128);
    assert_eq!(header[0], "t");
    assert_eq!(header[1], "y_1");
    assert_eq!(header[128], "y_128");
    assert_eq!(header[129], "tag_1");
    assert_eq!(rows.len(), 9);
    assert!(rows[0][129..].iter().all(|t| t == "-"));
    for (n, row) in rows.iter().enumerate().skip(1) {
        assert_eq!(row[0].parse::<f64>().unwrap(), traj.times[n]);
        for i in 0..128 {
            assert_eq!(row[1 + i].parse::<f64>().unwrap(), traj.states[n][i]);
            assert!(["L", "R", "T"].contains(&row[129 + i].as_str()));
        }
    }
}
