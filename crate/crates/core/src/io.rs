//! Instance generators and JSON documents for instances, solutions and reports.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    CancellationModel, CostBreakdown, Instance, Parameters, Point, Provenance, Route, RoutingModel,
    Schedule, SchedulingModel, Solution, SolverConfig,
};
use crate::stochastic::RngStream;

pub const SCHEMA_VERSION: u32 = 1;

/// Half edge of the square service region, km.
pub const REGION_HALF_EDGE: f64 = 25.0;

/// Fixed experiment parameters for `n` customers.
pub fn case_study_params(n: usize, p_c: f64) -> Parameters {
    Parameters {
        n_customers: n,
        end_time: 480.0,
        mu_s: 60.0,
        sigma_s: 30.0,
        mu_v: 1.0,
        assignment_cost: 250.0,
        lambda_t: 2.0,
        lambda_w: 10.0,
        lambda_i: 5.0,
        lambda_o: 15.0,
        p_c,
        travel_sigma: 0.5,
    }
}

fn uniform_points(n: usize, rng: &mut RngStream) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let x = -REGION_HALF_EDGE + 2.0 * REGION_HALF_EDGE * rng.unit();
            let y = -REGION_HALF_EDGE + 2.0 * REGION_HALF_EDGE * rng.unit();
            Point::new(x, y)
        })
        .collect()
}

/// `n` customers uniform on the square centred on the depot.
pub fn generate_case_study(n: usize, p_c: f64, seed: u64) -> Result<Instance> {
    if n == 0 {
        return Err(Error::param("n_customers", "at least one customer is required"));
    }
    let mut rng = RngStream::derive(seed, "case-study", n as u64);
    Instance::new(case_study_params(n, p_c), uniform_points(n, &mut rng))
}

/// Random instance and solver configuration, as offered by the UI's generator.
pub fn generate_random(seed: u64) -> (Instance, SolverConfig) {
    let mut rng = RngStream::derive(seed, "random-instance", 0);
    let n = [20, 30, 40, 50][rng.random_range(0..4)];
    let end_time = [240.0, 480.0, 720.0, 1200.0][rng.random_range(0..4)];
    let mu_s = rng.random_range(30.0..=60.0);
    let params = Parameters {
        n_customers: n,
        end_time,
        mu_s,
        sigma_s: 0.5 * mu_s,
        mu_v: 1.0,
        assignment_cost: rng.random_range(100.0..=250.0),
        lambda_t: [0.5, 1.0, 2.0][rng.random_range(0..3)],
        lambda_w: rng.random_range(0.0..=10.0),
        lambda_i: rng.random_range(0.0..=5.0),
        lambda_o: rng.random_range(10.0..=15.0),
        p_c: [0.01, 0.05, 0.1][rng.random_range(0..3)],
        travel_sigma: 0.5,
    };
    let mask: u8 = rng.random_range(1..8);
    let routing_models = RoutingModel::ALL
        .iter()
        .enumerate()
        .filter(|(k, _)| mask & (1 << k) != 0)
        .map(|(_, m)| *m)
        .collect();
    let scheduling_model = [SchedulingModel::Baseline, SchedulingModel::Simulated, SchedulingModel::Both]
        [rng.random_range(0..3)];
    let cancellation_lambda = if rng.random_bool(0.5) {
        CancellationModel::Notified
    } else {
        CancellationModel::LastMinute
    };
    let metaheuristic_level = rng.random_range(0..=3);
    let customers = uniform_points(n, &mut rng);
    let instance = Instance::new(params, customers).expect("generated parameters are valid");
    let config = SolverConfig {
        routing_models,
        scheduling_model,
        cancellation_lambda,
        metaheuristic_level,
        master_seed: seed,
        ..SolverConfig::default()
    };
    (instance, config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub schema_version: u32,
    pub params: Parameters,
    pub customers: Vec<Point>,
}

impl From<&Instance> for InstanceDocument {
    fn from(inst: &Instance) -> Self {
        InstanceDocument {
            schema_version: SCHEMA_VERSION,
            params: *inst.params(),
            customers: inst.customers().to_vec(),
        }
    }
}

impl InstanceDocument {
    pub fn into_instance(self) -> Result<Instance> {
        check_version(self.schema_version)?;
        let mut params = self.params;
        if params.n_customers == 0 {
            params.n_customers = self.customers.len();
        }
        Instance::new(params, self.customers)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub schema_version: u32,
    pub routes: Vec<Vec<usize>>,
    pub schedules: Vec<Vec<f64>>,
    #[serde(default)]
    pub provenance: Provenance,
}

impl From<&Solution> for SolutionDocument {
    fn from(sol: &Solution) -> Self {
        SolutionDocument {
            schema_version: SCHEMA_VERSION,
            routes: sol.routes.iter().map(|r| r.stops.clone()).collect(),
            schedules: sol.schedules.iter().map(|s| s.appointments.clone()).collect(),
            provenance: sol.provenance.clone(),
        }
    }
}

impl SolutionDocument {
    pub fn into_solution(self) -> Result<Solution> {
        check_version(self.schema_version)?;
        if self.routes.len() != self.schedules.len() {
            return Err(Error::Document(format!(
                "`schedules` has {} entries but `routes` has {}",
                self.schedules.len(),
                self.routes.len()
            )));
        }
        let routes = self
            .routes
            .into_iter()
            .enumerate()
            .map(|(team, stops)| Route::new(team, stops))
            .collect();
        let schedules = self
            .schedules
            .into_iter()
            .enumerate()
            .map(|(team, a)| Schedule::new(team, a))
            .collect::<Result<_>>()?;
        Ok(Solution::new(routes, schedules, self.provenance))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: CostBreakdown,
}

impl From<&CostBreakdown> for ReportDocument {
    fn from(r: &CostBreakdown) -> Self {
        ReportDocument {
            schema_version: SCHEMA_VERSION,
            report: r.clone(),
        }
    }
}

fn check_version(v: u32) -> Result<()> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::Document(format!("unsupported `schema_version` {v}")))
    }
}

/// Pretty JSON text of any document.
pub fn to_text<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("documents serialize");
    s.push('\n');
    s
}

/// Parses a document; errors name the path of the offending field.
pub fn from_text<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Document(format!("field `{path}`: {}", e.into_inner()))
    })
}

pub fn instance_to_text(inst: &Instance) -> String {
    to_text(&InstanceDocument::from(inst))
}

pub fn instance_from_text(text: &str) -> Result<Instance> {
    from_text::<InstanceDocument>(text)?.into_instance()
}

pub fn solution_to_text(sol: &Solution) -> String {
    to_text(&SolutionDocument::from(sol))
}

pub fn solution_from_text(text: &str) -> Result<Solution> {
    from_text::<SolutionDocument>(text)?.into_solution()
}

pub fn report_to_text(report: &CostBreakdown) -> String {
    to_text(&ReportDocument::from(report))
}

pub fn report_from_text(text: &str) -> Result<CostBreakdown> {
    let doc: ReportDocument = from_text(text)?;
    check_version(doc.schema_version)?;
    Ok(doc.report)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<()> {
    write_text(path, &instance_to_text(inst))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    instance_from_text(&read_text(path)?)
}

pub fn save_solution(sol: &Solution, path: &Path) -> Result<()> {
    write_text(path, &solution_to_text(sol))
}

pub fn load_solution(path: &Path) -> Result<Solution> {
    solution_from_text(&read_text(path)?)
}

pub fn save_report(report: &CostBreakdown, path: &Path) -> Result<()> {
    write_text(path, &report_to_text(report))
}

pub fn load_report(path: &Path) -> Result<CostBreakdown> {
    report_from_text(&read_text(path)?)
}
