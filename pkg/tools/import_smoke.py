import importlib
mods = [
  "charflow.physics.eos",
  "charflow.physics.state",
  "charflow.solver.numerics",
  "charflow.solver.constraints",
  "charflow.solver.estimate",
  "charflow.solver.goursat",
  "charflow.solver.marching",
  "charflow.solver.hodograph",
  "charflow.verify.residuals",
  "charflow.verify.bounds",
  "charflow.verify.contraction",
  "charflow.verify.euler",
  "charflow.verify.convergence",
  "charflow.report.csv_writer",
  "charflow.report.manifest",
  "charflow.report.plot_data",
  "charflow.fs.exports",
  "charflow.logs.rotating",
  "charflow.workers.pool",
  "charflow.scenario",
  "charflow.stages",
  "charflow.pipeline",
  "charflow.cli",
]
for m in mods:
    importlib.import_module(m)
print("IMPORT_OK")
