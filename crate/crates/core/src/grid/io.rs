use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{BoundaryTraces, Field, Grid1D, TimeGrid, Trajectory};
use crate::error::{KdvError, Result};

const FORMAT_TAG: &str = "kdv-trajectory/1";

/// `x,u` with one row per node.
pub fn field_to_csv(f: &Field) -> String {
    let mut out = String::from("x,u\n");
    for (x, u) in f.grid().nodes().iter().zip(f.values()) {
        let _ = writeln!(out, "{x:.17e},{u:.17e}");
    }
    out
}

/// One row per time node: `t,u_0,...,u_{n-1}` followed by the six trace
/// channels.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let n = traj.grid().len();
    let mut out = String::from("t");
    for i in 0..n {
        let _ = write!(out, ",u_{i}");
    }
    out.push_str(",u_left,u_right,ux_left,ux_right,uxx_left,uxx_right\n");
    let tr = traj.traces();
    for (k, frame) in traj.frames().iter().enumerate() {
        let _ = write!(out, "{:.17e}", traj.time_grid().time(k));
        for v in frame {
            let _ = write!(out, ",{v:.17e}");
        }
        for c in tr.channels() {
            let _ = write!(out, ",{:.17e}", c[k]);
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize, Deserialize)]
struct Container {
    format: String,
    grid: Grid1D,
    time_grid: TimeGrid,
    frames: Vec<Vec<f64>>,
    traces: BoundaryTraces,
}

/// Self-describing JSON container with grid metadata.
pub fn trajectory_to_json(traj: &Trajectory) -> Result<String> {
    let c = Container {
        format: FORMAT_TAG.to_string(),
        grid: *traj.grid(),
        time_grid: *traj.time_grid(),
        frames: traj.frames().to_vec(),
        traces: traj.traces().clone(),
    };
    serde_json::to_string(&c).map_err(|e| KdvError::Serialization(e.to_string()))
}

pub fn trajectory_from_json(text: &str) -> Result<Trajectory> {
    let c: Container =
        serde_json::from_str(text).map_err(|e| KdvError::Serialization(e.to_string()))?;
    if c.format != FORMAT_TAG {
        return Err(KdvError::Serialization(format!(
            "unknown container format {:?}",
            c.format
        )));
    }
    // re-validate through the public constructors
    let grid = Grid1D::new(c.grid.length(), c.grid.len())?;
    let time_grid = TimeGrid::new(c.time_grid.horizon(), c.time_grid.steps())?;
    Trajectory::with_traces(grid, time_grid, c.frames, c.traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    fn sample() -> Trajectory {
        let g = make_grid(1.0, 9).unwrap();
        let tg = TimeGrid::new(0.5, 4).unwrap();
        let frames = tg
            .times()
            .iter()
            .map(|&t| g.nodes().iter().map(|&x| x * x - t).collect())
            .collect();
        Trajectory::from_frames(g, tg, frames).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let traj = sample();
        let back = trajectory_from_json(&trajectory_to_json(&traj).unwrap()).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn json_rejects_foreign_containers() {
        let text = trajectory_to_json(&sample()).unwrap().replace(FORMAT_TAG, "other");
        assert_eq!(
            trajectory_from_json(&text).unwrap_err().name(),
            "serialization-error"
        );
    }

    #[test]
    fn csv_shapes() {
        let traj = sample();
        let csv = trajectory_to_csv(&traj);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 5);
        assert_eq!(lines[0].split(',').count(), 1 + 9 + 6);
        let f = field_to_csv(&traj.field(0));
        assert_eq!(f.lines().count(), 10);
        assert!(f.starts_with("x,u\n"));
    }
}
