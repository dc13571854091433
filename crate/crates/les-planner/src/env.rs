//! Planning environments: the JSON file schema, validation, and the shipped
//! potential cost-map presets.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{
    CollisionModel, CostField, GoalRegion, HyperRect, SearchSpace, State,
};

/// A fully validated planning problem.
#[derive(Clone, Debug)]
pub struct Environment {
    pub name: String,
    pub space: SearchSpace,
    pub cost: CostField,
    pub collision: CollisionModel,
    pub start: State,
    pub goal: GoalRegion,
    /// Recommended steering range for this environment, if the file or
    /// preset provides one. The CLI flag overrides it.
    pub eta: Option<f64>,
}

/// On-disk schema. `goal_radius` defaults to the collision resolution and
/// `eta`/`name` are optional extensions.
#[derive(Serialize, Deserialize)]
struct EnvironmentFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    dimension: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: CostSpec,
    #[serde(default)]
    obstacles: Vec<ObstacleSpec>,
    start: Vec<f64>,
    goal: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    goal_radius: Option<f64>,
    resolution: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CostSpec {
    Constant,
    Potential { centers: Vec<Vec<f64>> },
}

#[derive(Serialize, Deserialize)]
struct ObstacleSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Environment {
    pub fn from_json(json: &str, fallback_name: &str) -> Result<Self> {
        let file: EnvironmentFile = serde_json::from_str(json)?;
        Environment::from_parsed(file, fallback_name)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let json = std::fs::read_to_string(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("environment");
        Environment::from_json(&json, stem)
    }

    fn from_parsed(file: EnvironmentFile, fallback_name: &str) -> Result<Self> {
        let d = file.dimension;
        let check_dim = |v: &[f64], what: &str| -> Result<()> {
            if v.len() != d {
                return Err(Error::InvalidEnvironment(format!(
                    "{what} has {} coordinates, expected {d}",
                    v.len()
                )));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidEnvironment(format!(
                    "{what} contains a non-finite coordinate"
                )));
            }
            Ok(())
        };
        check_dim(&file.lower, "lower bound")?;
        check_dim(&file.upper, "upper bound")?;
        check_dim(&file.start, "start")?;
        check_dim(&file.goal, "goal")?;

        let space = SearchSpace::new(State::new(file.lower), State::new(file.upper))?;
        let cost = match file.cost {
            CostSpec::Constant => CostField::Constant,
            CostSpec::Potential { centers } => {
                if centers.is_empty() {
                    return Err(Error::InvalidEnvironment(
                        "potential cost needs at least one center".into(),
                    ));
                }
                let mut parsed = Vec::with_capacity(centers.len());
                for c in centers {
                    check_dim(&c, "potential center")?;
                    let c = State::new(c);
                    if !space.contains(&c) {
                        return Err(Error::InvalidEnvironment(
                            "potential center lies outside the bounds".into(),
                        ));
                    }
                    parsed.push(c);
                }
                potential_costmap(parsed)
            }
        };
        let mut obstacles = Vec::with_capacity(file.obstacles.len());
        for o in file.obstacles {
            check_dim(&o.lower, "obstacle lower corner")?;
            check_dim(&o.upper, "obstacle upper corner")?;
            obstacles.push(HyperRect::new(State::new(o.lower), State::new(o.upper))?);
        }
        let collision = CollisionModel::new(obstacles, file.resolution)?;
        let start = State::new(file.start);
        let goal_center = State::new(file.goal);
        let goal_radius = file.goal_radius.unwrap_or(file.resolution);
        let goal = GoalRegion::new(goal_center, goal_radius)?;

        if let Some(eta) = file.eta {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(Error::InvalidEnvironment("eta must be positive".into()));
            }
        }

        let env = Environment {
            name: file.name.unwrap_or_else(|| fallback_name.to_string()),
            space,
            cost,
            collision,
            start,
            goal,
            eta: file.eta,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.space.contains(&self.start) {
            return Err(Error::InvalidEnvironment("start out of bounds".into()));
        }
        if !self.space.contains(self.goal.center()) {
            return Err(Error::InvalidEnvironment("goal out of bounds".into()));
        }
        if !self.collision.state_free(&self.start) {
            return Err(Error::InvalidEnvironment("start is in collision".into()));
        }
        if !self.collision.state_free(self.goal.center()) {
            return Err(Error::InvalidEnvironment("goal is in collision".into()));
        }
        if self.start == *self.goal.center() {
            return Err(Error::InvalidEnvironment("start equals goal".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.space.dimension()
    }

    pub fn resolution(&self) -> f64 {
        self.collision.resolution()
    }

    /// Serialize back to the file schema. Only constant and potential cost
    /// fields are representable.
    pub fn to_json_string(&self) -> Result<String> {
        let cost = match &self.cost {
            CostField::Constant => CostSpec::Constant,
            CostField::Potential { centers } => CostSpec::Potential {
                centers: centers.iter().map(|c| c.coords().to_vec()).collect(),
            },
            CostField::Custom(_) => {
                return Err(Error::InvalidEnvironment(
                    "custom cost fields have no file representation".into(),
                ))
            }
        };
        let file = EnvironmentFile {
            name: Some(self.name.clone()),
            dimension: self.dimension(),
            lower: self.space.lower().coords().to_vec(),
            upper: self.space.upper().coords().to_vec(),
            cost,
            obstacles: self
                .collision
                .obstacles()
                .iter()
                .map(|o| ObstacleSpec {
                    lower: o.lower.coords().to_vec(),
                    upper: o.upper.coords().to_vec(),
                })
                .collect(),
            start: self.start.coords().to_vec(),
            goal: self.goal.center().coords().to_vec(),
            goal_radius: Some(self.goal.radius()),
            resolution: self.resolution(),
            eta: self.eta,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

/// Cost field `C(x) = 1 + 9 sum_i exp(-||c_i - x||^2)`.
pub fn potential_costmap(centers: Vec<State>) -> CostField {
    assert!(!centers.is_empty(), "potential cost needs centers");
    CostField::Potential { centers }
}

/// Steering ranges for the shipped presets.
pub fn preset_eta(dimension: usize) -> Option<f64> {
    match dimension {
        2 => Some(0.4),
        4 => Some(0.6),
        6 => Some(1.5),
        _ => None,
    }
}

/// Shipped potential cost-map preset in `[0, 10]^d` for d in {2, 4, 6}.
///
/// Start sits at `(1, .., 1)`, the goal ball (radius 0.5) at `(9, .., 9)`.
/// `2^ceil(d/2)` high-cost centers form a sign lattice of offset 1 on the
/// first `ceil(d/2)` axes around the midpoint, so the straight start-goal
/// line passes close to every bump and cost-aware detours pay off.
pub fn potential_preset(dimension: usize) -> Result<Environment> {
    if ![2, 4, 6].contains(&dimension) {
        return Err(Error::InvalidConfig(format!(
            "no potential preset for dimension {dimension}"
        )));
    }
    let d = dimension;
    let lower = State::new(vec![0.0; d]);
    let upper = State::new(vec![10.0; d]);
    let space = SearchSpace::new(lower, upper)?;
    let offset_axes = d.div_ceil(2);
    let mut centers = Vec::with_capacity(1 << offset_axes);
    for mask in 0..(1u32 << offset_axes) {
        let mut c = vec![5.0; d];
        for (axis, coord) in c.iter_mut().enumerate().take(offset_axes) {
            *coord += if mask >> axis & 1 == 1 { 1.0 } else { -1.0 };
        }
        centers.push(State::new(c));
    }
    let env = Environment {
        name: format!("potential-{d}d"),
        space,
        cost: potential_costmap(centers),
        collision: CollisionModel::obstacle_free(0.1),
        start: State::new(vec![1.0; d]),
        goal: GoalRegion::new(State::new(vec![9.0; d]), 0.5)?,
        eta: preset_eta(d),
    };
    env.validate()?;
    Ok(env)
}
