use gravmzi::emit::{
    psd_table, read_sweep_csv, read_sweep_json, write_psd, write_sweep, Format, SWEEP_COLUMNS,
};
use gravmzi::scenario::{ExperimentScenario, SCENARIO_DIR_ENV};
use gravmzi::sweep::run_sweep;
use gravmzi::Error;
use std::f64::consts::FRAC_PI_2;

fn load(text: &str) -> gravmzi::Result<ExperimentScenario> {
    ExperimentScenario::from_toml_str(text, None)
}

#[test]
fn baseline_reproduces_reference_inputs() {
    let s = ExperimentScenario::baseline();
    assert_eq!(s.source.rate, 1e6);
    assert_eq!(s.detectors.efficiency, 0.9);
    assert_eq!(s.detectors.dark_rate, 1.0);
    assert_eq!(s.geometry.arm_length, 1e5);
    assert_eq!(s.geometry.separation, 1.0);
    assert_eq!(s.fiber.group_index, 1.468);
    assert!((s.fiber.wavelength - 1550e-9).abs() < 1e-21);
    assert_eq!(s.attenuation.fiber_alpha, 0.17);
    assert_eq!(s.attenuation.component_losses, 0.5);
    assert_eq!(s.spools[0].radius, 0.2);
    assert_eq!(s.kinematics[0].axial_speed, 400.0);
    assert_eq!(s.kinematics[0].angular_speed, 1e9);
    assert!((s.spools[0].latitude - 48.21f64.to_radians()).abs() < 1e-15);
    assert_eq!(s.spools[0].azimuth, 0.0);
    assert_eq!(s.arm2_fraction, 0.5);
}

#[test]
fn minimal_file_takes_defaults() {
    let s = load("[geometry]\narm_length = \"50 km\"\nseparation = \"2 m\"\n[fiber]\nwavelength = \"1310 nm\"\n")
        .unwrap();
    assert_eq!(s.geometry.arm_length, 5e4);
    assert_eq!(s.geometry.separation, 2.0);
    assert!((s.fiber.wavelength - 1310e-9).abs() < 1e-21);
    let b = ExperimentScenario::baseline();
    assert_eq!(s.source, b.source);
    assert_eq!(s.detectors, b.detectors);
    assert_eq!(s.switch, b.switch);
    assert_eq!(s.spools[0].latitude, b.spools[0].latitude);
    assert_eq!(s.theta_schedule, b.theta_schedule);
}

#[test]
fn empty_file_is_the_baseline_physics() {
    let s = load("").unwrap();
    let b = ExperimentScenario::baseline();
    assert_eq!(s.geometry, b.geometry);
    assert_eq!(s.kinematics, b.kinematics);
    assert_eq!(s.dispersion, b.dispersion);
    assert_eq!(s.thermal, b.thermal);
}

#[test]
fn theta_outside_quarter_turn_is_rejected() {
    let e = load("theta_schedule = [\"0 deg\", \"6.283185307179586 rad\"]").unwrap_err();
    assert!(
        matches!(
            e,
            Error::Domain {
                field: "theta_schedule",
                ..
            }
        ),
        "{e}"
    );
    assert!(load("theta_schedule = [\"-1 deg\"]").is_err());
}

#[test]
fn invalid_fields_are_named() {
    let cases = [
        ("[geometry]\narm_length = \"-1 km\"", "arm_length"),
        ("[fiber]\ngroup_index = 0.5", "group_index"),
        ("[detectors]\nefficiency = 1.5", "efficiency"),
        ("[detectors]\ndark_rate = \"-1 /s\"", "dark_rate"),
        ("[switch]\nduty = 1.0", "duty"),
        ("[source]\nbandwidth = \"0 Hz\"", "bandwidth"),
        ("[spools]\nlatitude = \"100 deg\"", "latitude"),
        (
            "[kinematics]\nangular_speed = \"2e9 rad/s\"",
            "angular_speed",
        ),
        ("[geometry]\narm2_fraction = 1.0", "arm2_fraction"),
        ("polarization_visibility = 0.0", "polarization_visibility"),
        ("residual_noise_rms = \"-0.1 rad\"", "residual_noise_rms"),
        (
            "[noise]\ndetection_bandwidth = \"5 MHz\"",
            "modulation_frequency",
        ),
    ];
    for (text, field) in cases {
        let e = load(text).unwrap_err().to_string();
        assert!(e.contains(field), "`{text}` gave `{e}`");
    }
}

#[test]
fn parse_errors_point_at_the_line() {
    let e = load("name = \"x\"\n[fiber]\nwavelength = \"1550 s\"\n")
        .unwrap_err()
        .to_string();
    assert!(e.contains("line 3"), "{e}");
    assert!(e.contains("unknown length unit"), "{e}");
    let e = load("[fiber]\nwavelenght = \"1550 nm\"\n")
        .unwrap_err()
        .to_string();
    assert!(e.contains("wavelenght"), "{e}");
}

#[test]
fn horizontal_row_sits_at_calibration() {
    let mut s = ExperimentScenario::baseline();
    s.theta_schedule = vec![0.0];
    let r = &run_sweep(&s).unwrap().rows[0];
    assert_eq!(r.dphi_g_12, 0.0);
    assert_eq!(r.dphi_g_13, 0.0);
    assert_eq!([r.p_arm2_d1, r.p_arm2_d2, r.p_arm2_d3], [0.5, 0.25, 0.25]);
    assert_eq!(
        [r.p_arm3_d1, r.p_arm3_d2, r.p_arm3_d3],
        [0.25, 0.375, 0.375]
    );
    assert_eq!(r.t_int_d1, None);
    assert_eq!(r.t_int_max, None);
    assert_eq!(r.dphi_c_drift, 0.0);
}

#[test]
fn vertical_row_matches_reference_numbers() {
    let mut s = ExperimentScenario::baseline();
    s.theta_schedule = vec![FRAC_PI_2];
    let r = &run_sweep(&s).unwrap().rows[0];
    assert!((r.dphi_g_13 - 6.4953e-5).abs() < 1e-8, "{}", r.dphi_g_13);
    assert!((r.dphi_g_12 - 0.5 * r.dphi_g_13).abs() < 1e-18);
    // D1, arm 3 open, against A = 1/4: 0.686 days
    let days = r.t_int_d1.unwrap() / 86400.0;
    assert!((days - 0.686).abs() < 0.005, "{days}");
    let max_days = r.t_int_max.unwrap() / 86400.0;
    assert!((0.5..=8.0).contains(&max_days), "{max_days}");
    assert!((r.visibility_13 - 1.0).abs() < 1e-9);
    assert!(r.dphi_c_aligned.is_some());
    assert!((r.dphi_c_aligned.unwrap() - r.dphi_c_oscillating).abs() < 1e-12);
}

#[test]
fn repeated_angles_give_identical_rows() {
    let mut s = ExperimentScenario::baseline();
    s.theta_schedule = vec![0.3, 0.3, 1.1, 0.3];
    let res = run_sweep(&s).unwrap();
    assert_eq!(res.rows.len(), 4);
    assert_eq!(res.rows[0], res.rows[1]);
    assert_eq!(res.rows[0], res.rows[3]);
    assert_eq!(res.rows[2].theta, 1.1);
}

#[test]
fn empty_sweep_is_header_only_csv() {
    let s = load("theta_schedule = []").unwrap();
    let res = run_sweep(&s).unwrap();
    assert!(res.rows.is_empty());
    let mut buf = Vec::new();
    write_sweep(&res, Format::Csv, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, format!("{}\n", SWEEP_COLUMNS.join(",")));
}

#[test]
fn json_and_csv_round_trip() {
    let res = run_sweep(&ExperimentScenario::baseline()).unwrap();
    let mut json = Vec::new();
    write_sweep(&res, Format::Json, &mut json).unwrap();
    assert_eq!(read_sweep_json(json.as_slice()).unwrap(), res);
    let mut csv = Vec::new();
    write_sweep(&res, Format::Csv, &mut csv).unwrap();
    assert_eq!(read_sweep_csv(csv.as_slice()).unwrap(), res.rows);
}

#[test]
fn wrong_schema_is_rejected() {
    let doc = r#"{"schema":"gravmzi.sweep","schema_version":99,"data":{"scenario":"x","rows":[]}}"#;
    assert!(read_sweep_json(doc.as_bytes()).is_err());
}

#[test]
fn sweep_output_is_byte_identical() {
    let s = ExperimentScenario::baseline();
    let emit = |f| {
        let mut b = Vec::new();
        write_sweep(&run_sweep(&s).unwrap(), f, &mut b).unwrap();
        b
    };
    assert_eq!(emit(Format::Csv), emit(Format::Csv));
    assert_eq!(emit(Format::Json), emit(Format::Json));
}

#[test]
fn psd_table_contains_the_anchor() {
    let psd = ExperimentScenario::baseline().psd().unwrap();
    let rows = psd_table(&psd, 1.0, 1e6, 61).unwrap();
    let anchor = rows
        .iter()
        .find(|r| (r.freq_hz / 1e5 - 1.0).abs() < 1e-12)
        .expect("1e5 Hz on the grid");
    assert!((anchor.amp_rad_per_sqrthz - 1e-6).abs() < 1e-15);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psd.csv");
    let mut buf = Vec::new();
    write_psd(&rows, Format::Csv, &mut buf).unwrap();
    std::fs::write(&path, &buf).unwrap();
    let back = gravmzi::noise::PhaseNoisePsd::load_csv(&path).unwrap();
    for r in &rows {
        let a = back.amplitude(r.freq_hz).unwrap();
        assert!((a / r.amp_rad_per_sqrthz - 1.0).abs() < 1e-9);
    }
}

#[test]
fn scenarios_resolve_by_path_dir_and_name() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("flat.csv"),
        "freq_hz,amp_rad_per_sqrthz\n1,1e-7\n1e7,1e-7\n",
    )
    .unwrap();
    std::fs::write(
        dir.path().join("short.toml"),
        "name = \"short\"\n[geometry]\narm_length = \"10 km\"\n[noise]\npsd_table = \"flat.csv\"\n",
    )
    .unwrap();
    let by_path =
        ExperimentScenario::resolve(dir.path().join("short.toml").to_str().unwrap()).unwrap();
    assert_eq!(by_path.geometry.arm_length, 1e4);
    assert!((by_path.psd().unwrap().amplitude(1e3).unwrap() - 1e-7).abs() < 1e-20);

    // only this test touches the variable
    unsafe { std::env::set_var(SCENARIO_DIR_ENV, dir.path()) };
    assert_eq!(ExperimentScenario::resolve("short").unwrap().name, "short");
    assert_eq!(
        ExperimentScenario::resolve("baseline").unwrap().name,
        "baseline"
    );
    assert!(ExperimentScenario::resolve("nope").is_err());
}
