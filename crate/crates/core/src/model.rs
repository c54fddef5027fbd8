//! Matrix-form MILP construction for the balance and cost-aware models.
//!
//! Column layout is fixed: for each assignable task in input order, one
//! binary column per qualified employee (input order), then `D+`, then `D-`.
//! Row layout: one overload row per employee, one underload row per employee,
//! one assignment equality per assignable task, and (min-max form only) a
//! coupling row `D+ - D- = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::ops::Range;

use crate::cost::{CostTable, Hyperparams};
use crate::domain::{
    partition_assignable, target_for, Assignment, EmployeeId, Partition, ProblemInstance, TaskId,
};
use crate::error::{Error, Result};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    /// `x[employee, task]`, indices into the instance's employee and task lists.
    Assign { employee: usize, task: usize },
    DevPlus,
    DevMinus,
}

/// Ordered column descriptors plus the column range owned by each assignable task.
#[derive(Debug, Clone, PartialEq)]
pub struct VarIndex {
    columns: Vec<Column>,
    task_ranges: Vec<Range<usize>>,
}

impl VarIndex {
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Columns of the `k`-th assignable task.
    pub fn task_range(&self, k: usize) -> Range<usize> {
        self.task_ranges[k].clone()
    }

    pub fn task_count(&self) -> usize {
        self.task_ranges.len()
    }

    pub fn dev_plus(&self) -> usize {
        self.columns.len() - 2
    }

    pub fn dev_minus(&self) -> usize {
        self.columns.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// A sparse linear constraint `sum(coeff * x[col]) relation rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// How the two deviation variables enter the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DeviationForm {
    /// Minimize `D+ + D-`.
    #[default]
    Split,
    /// Minimize a single bound on `|W_i - W_target|`: `D+` and `D-` are tied
    /// together and only `D+` is charged.
    MinMax,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelOptions {
    pub deviation: DeviationForm,
    /// Bound assignment cost rather than effective hours in the fairness
    /// rows of the cost-aware model.
    pub fairness_on_cost: bool,
}

/// Solver-agnostic MILP in minimization form.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub var_index: VarIndex,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub integral: Vec<bool>,
    /// Coefficient of each assign column in its employee's fairness rows.
    weights: Vec<f64>,
    employee_ids: Vec<EmployeeId>,
    task_ids: Vec<TaskId>,
    unassigned: Vec<TaskId>,
    target: f64,
    options: ModelOptions,
}

impl MilpModel {
    pub fn num_columns(&self) -> usize {
        self.var_index.len()
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn num_employees(&self) -> usize {
        self.employee_ids.len()
    }

    /// Ids of the assignable tasks, in column order.
    pub fn task_ids(&self) -> &[TaskId] {
        &self.task_ids
    }

    pub fn unassigned(&self) -> &[TaskId] {
        &self.unassigned
    }

    /// Fairness-row coefficient of column `col` (zero for deviation columns).
    pub fn weight(&self, col: usize) -> f64 {
        self.weights[col]
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(values)
            .map(|(c, v)| c * v)
            .sum()
    }

    /// Per-employee fairness-row activity for a column vector.
    pub fn loads(&self, values: &[f64]) -> Vec<f64> {
        let mut loads = vec![0.0; self.employee_ids.len()];
        for (j, col) in self.var_index.columns.iter().enumerate() {
            if let Column::Assign { employee, .. } = *col {
                if values[j] != 0.0 {
                    loads[employee] += values[j] * self.weights[j];
                }
            }
        }
        loads
    }

    /// Full column vector for an integral choice (index into each task's
    /// column range), with the deviation columns set to their smallest
    /// feasible values.
    pub fn solution_from_choices(&self, choices: &[usize]) -> Vec<f64> {
        let mut values = vec![0.0; self.num_columns()];
        let mut loads = vec![0.0; self.employee_ids.len()];
        for (k, &c) in choices.iter().enumerate() {
            let j = self.var_index.task_ranges[k].start + c;
            values[j] = 1.0;
            if let Column::Assign { employee, .. } = self.var_index.columns[j] {
                loads[employee] += self.weights[j];
            }
        }
        let (above, below) = self.deviations(&loads);
        values[self.var_index.dev_plus()] = above;
        values[self.var_index.dev_minus()] = below;
        values
    }

    /// Smallest `(D+, D-)` compatible with the given loads.
    pub fn deviations(&self, loads: &[f64]) -> (f64, f64) {
        let mut above = 0.0f64;
        let mut below = 0.0f64;
        for &w in loads {
            above = above.max(w - self.target);
            below = below.max(self.target - w);
        }
        match self.options.deviation {
            DeviationForm::Split => (above, below),
            DeviationForm::MinMax => {
                let z = above.max(below);
                (z, z)
            }
        }
    }

    /// Largest row violation of `values` (0 when every row holds).
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(j, a)| a * values[j]).sum();
            let v = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in values.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    /// Same constraints with assign-column objective coefficients replaced by
    /// `(1 - lambda) * cost[col]` and deviation coefficients by `lambda`.
    pub(crate) fn reweighted(&self, lambda: f64, column_costs: &[f64]) -> Self {
        let mut model = self.clone();
        for (j, col) in model.var_index.columns.iter().enumerate() {
            model.objective[j] = match col {
                Column::Assign { .. } => (1.0 - lambda) * column_costs[j],
                Column::DevPlus => lambda,
                Column::DevMinus => match self.options.deviation {
                    DeviationForm::Split => lambda,
                    DeviationForm::MinMax => 0.0,
                },
            };
        }
        model
    }

    /// Renders the model in CPLEX LP text format, one constraint per line.
    pub fn to_lp_string(&self) -> String {
        let mut out = String::new();
        let name = |j: usize| -> String {
            match self.var_index.columns[j] {
                Column::Assign { .. } => format!("x{j}"),
                Column::DevPlus => String::from("dev_plus"),
                Column::DevMinus => String::from("dev_minus"),
            }
        };
        let terms = |coeffs: &mut dyn Iterator<Item = (usize, f64)>| -> String {
            let mut s = String::new();
            for (j, a) in coeffs {
                if a < 0.0 {
                    let _ = write!(s, " - {} {}", -a, name(j));
                } else {
                    let _ = write!(s, " + {} {}", a, name(j));
                }
            }
            if s.is_empty() {
                s.push_str(" 0 dev_plus");
            }
            s
        };
        let _ = writeln!(out, "\\ target workload {}", self.target);
        for (j, col) in self.var_index.columns.iter().enumerate() {
            if let Column::Assign { .. } = col {
                let (e, t) = self.describe(j);
                let _ = writeln!(out, "\\ x{j} = {e} on {t}");
            }
        }
        let _ = writeln!(out, "Minimize");
        let mut obj = self
            .objective
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, c)| c != 0.0);
        let _ = writeln!(out, " obj:{}", terms(&mut obj));
        let _ = writeln!(out, "Subject To");
        for (r, row) in self.rows.iter().enumerate() {
            let mut it = row.coeffs.iter().copied();
            let _ = writeln!(
                out,
                " r{r}:{} {} {}",
                terms(&mut it),
                row.relation.symbol(),
                row.rhs
            );
        }
        let _ = writeln!(out, "Bounds");
        for j in 0..self.num_columns() {
            if self.upper[j].is_finite() {
                let _ = writeln!(out, " {} <= {} <= {}", self.lower[j], name(j), self.upper[j]);
            } else {
                let _ = writeln!(out, " {} >= {}", name(j), self.lower[j]);
            }
        }
        let _ = writeln!(out, "Binaries");
        for j in (0..self.num_columns()).filter(|&j| self.integral[j]) {
            let _ = writeln!(out, " {}", name(j));
        }
        let _ = writeln!(out, "End");
        out
    }

    fn describe(&self, j: usize) -> (&EmployeeId, &TaskId) {
        let k = self
            .var_index
            .task_ranges
            .partition_point(|r| r.end <= j);
        match self.var_index.columns[j] {
            Column::Assign { employee, .. } => (&self.employee_ids[employee], &self.task_ids[k]),
            _ => unreachable!("describe called on a deviation column"),
        }
    }
}

struct Layout {
    partition: Partition,
    var_index: VarIndex,
    target: f64,
}

fn layout(instance: &ProblemInstance) -> Layout {
    let partition = partition_assignable(instance);
    let mut columns = Vec::new();
    let mut task_ranges = Vec::with_capacity(partition.assignable.len());
    for (k, &t) in partition.assignable.iter().enumerate() {
        let start = columns.len();
        for &i in &partition.qualified[k] {
            columns.push(Column::Assign {
                employee: i,
                task: t,
            });
        }
        task_ranges.push(start..columns.len());
    }
    columns.push(Column::DevPlus);
    columns.push(Column::DevMinus);
    let target = target_for(instance, &partition);
    Layout {
        partition,
        var_index: VarIndex {
            columns,
            task_ranges,
        },
        target,
    }
}

fn assemble(
    instance: &ProblemInstance,
    layout: Layout,
    weights: Vec<f64>,
    objective: Vec<f64>,
    options: ModelOptions,
) -> MilpModel {
    let Layout {
        partition,
        var_index,
        target,
    } = layout;
    let n = var_index.len();
    let n_emp = instance.employees().len();
    let (dp, dm) = (var_index.dev_plus(), var_index.dev_minus());

    let mut per_employee: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_emp];
    for (j, col) in var_index.columns.iter().enumerate() {
        if let Column::Assign { employee, .. } = *col {
            per_employee[employee].push((j, weights[j]));
        }
    }
    let mut rows = Vec::with_capacity(2 * n_emp + var_index.task_count() + 1);
    for coeffs in &per_employee {
        let mut c = coeffs.clone();
        c.push((dp, -1.0));
        rows.push(Row {
            coeffs: c,
            relation: Relation::Le,
            rhs: target,
        });
    }
    for coeffs in &per_employee {
        let mut c = coeffs.clone();
        c.push((dm, 1.0));
        rows.push(Row {
            coeffs: c,
            relation: Relation::Ge,
            rhs: target,
        });
    }
    for range in &var_index.task_ranges {
        rows.push(Row {
            coeffs: range.clone().map(|j| (j, 1.0)).collect(),
            relation: Relation::Eq,
            rhs: 1.0,
        });
    }
    if options.deviation == DeviationForm::MinMax {
        rows.push(Row {
            coeffs: vec![(dp, 1.0), (dm, -1.0)],
            relation: Relation::Eq,
            rhs: 0.0,
        });
    }

    let mut lower = vec![0.0; n];
    let mut upper = vec![1.0; n];
    let mut integral = vec![true; n];
    for j in [dp, dm] {
        lower[j] = 0.0;
        upper[j] = f64::INFINITY;
        integral[j] = false;
    }

    MilpModel {
        var_index,
        objective,
        rows,
        lower,
        upper,
        integral,
        weights,
        employee_ids: instance.employees().iter().map(|e| e.id().clone()).collect(),
        task_ids: partition
            .assignable
            .iter()
            .map(|&t| instance.tasks()[t].id().clone())
            .collect(),
        unassigned: partition.unassigned,
        target,
        options,
    }
}

fn hour_weights(instance: &ProblemInstance, var_index: &VarIndex) -> Vec<f64> {
    var_index
        .columns
        .iter()
        .map(|col| match *col {
            Column::Assign { employee, task } => {
                let task = &instance.tasks()[task];
                instance.employees()[employee]
                    .effective_hours(task)
                    .expect("assign columns exist only for qualified pairs")
            }
            _ => 0.0,
        })
        .collect()
}

fn deviation_objective(n: usize, options: ModelOptions, weight: f64) -> Vec<f64> {
    let mut objective = vec![0.0; n];
    objective[n - 2] = weight;
    if options.deviation == DeviationForm::Split {
        objective[n - 1] = weight;
    }
    objective
}

/// Workload-balance model: minimize `D+ + D-` subject to per-employee
/// overload/underload rows on efficiency-adjusted hours and one assignment
/// equality per assignable task.
pub fn build_balance_model(instance: &ProblemInstance) -> MilpModel {
    build_balance_model_with(instance, ModelOptions::default())
}

pub fn build_balance_model_with(instance: &ProblemInstance, options: ModelOptions) -> MilpModel {
    let layout = layout(instance);
    let weights = hour_weights(instance, &layout.var_index);
    let objective = deviation_objective(layout.var_index.len(), options, 1.0);
    assemble(instance, layout, weights, objective, options)
}

/// Cost-aware model: objective `lambda * (D+ + D-) + (1 - lambda) * sum(x * C)`
/// over the balance model's rows.
pub fn build_cost_model(
    instance: &ProblemInstance,
    hp: &Hyperparams,
    costs: &CostTable,
) -> Result<MilpModel> {
    build_cost_model_with(instance, hp, costs, ModelOptions::default())
}

pub fn build_cost_model_with(
    instance: &ProblemInstance,
    hp: &Hyperparams,
    costs: &CostTable,
    options: ModelOptions,
) -> Result<MilpModel> {
    let layout = layout(instance);
    let column_costs = column_costs(instance, &layout.var_index, costs)?;
    let weights = if options.fairness_on_cost {
        column_costs.clone()
    } else {
        hour_weights(instance, &layout.var_index)
    };
    let n = layout.var_index.len();
    let mut objective = deviation_objective(n, options, hp.lambda);
    for (j, col) in layout.var_index.columns.iter().enumerate() {
        if let Column::Assign { .. } = col {
            objective[j] = (1.0 - hp.lambda) * column_costs[j];
        }
    }
    Ok(assemble(instance, layout, weights, objective, options))
}

/// Cost of each column (zero on the deviation columns).
pub(crate) fn column_costs_for(model: &MilpModel, instance: &ProblemInstance, costs: &CostTable) -> Result<Vec<f64>> {
    column_costs(instance, &model.var_index, costs)
}

fn column_costs(
    instance: &ProblemInstance,
    var_index: &VarIndex,
    costs: &CostTable,
) -> Result<Vec<f64>> {
    var_index
        .columns
        .iter()
        .map(|col| match *col {
            Column::Assign { employee, task } => {
                let e = instance.employees()[employee].id().clone();
                let t = instance.tasks()[task].id().clone();
                costs
                    .get(&(e.clone(), t.clone()))
                    .copied()
                    .ok_or(Error::MissingCost {
                        employee: e,
                        task: t,
                    })
            }
            _ => Ok(0.0),
        })
        .collect()
}

/// Maps an integral solution back to task assignments.
///
/// Assign columns within `1e-6` of 0 or 1 are rounded; anything else is
/// reported as [`Error::Fractional`].
pub fn extract_assignment(model: &MilpModel, solution: &[f64]) -> Result<Assignment> {
    if solution.len() != model.num_columns() {
        return Err(Error::SolutionLength {
            expected: model.num_columns(),
            got: solution.len(),
        });
    }
    let mut assignment = Assignment {
        pairs: Default::default(),
        unassigned: model.unassigned.clone(),
    };
    for k in 0..model.var_index.task_count() {
        let mut chosen = None;
        for j in model.var_index.task_range(k) {
            let v = solution[j];
            if v > tol::INTEGRALITY && v < 1.0 - tol::INTEGRALITY {
                return Err(Error::Fractional {
                    column: j,
                    value: v,
                });
            }
            if v > 0.5 {
                if chosen.is_some() {
                    return Err(Error::MultipleAssignment(model.task_ids[k].clone()));
                }
                chosen = Some(j);
            }
        }
        let j = chosen.ok_or_else(|| Error::IncompleteAssignment(model.task_ids[k].clone()))?;
        let Column::Assign { employee, .. } = model.var_index.columns[j] else {
            unreachable!("task ranges hold assign columns only")
        };
        assignment
            .pairs
            .insert(model.task_ids[k].clone(), model.employee_ids[employee].clone());
    }
    Ok(assignment)
}
