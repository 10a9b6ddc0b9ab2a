import glob
import os
import re
import shutil

from keras_autodoc import DocumentationGenerator
from mdutils.mdutils import MdUtils

pages = {
    "model.md": [
        "fbsir.model.ModelParams",
        "fbsir.model.Profile",
        "fbsir.model.InitialData",
        "fbsir.model.ThresholdReport",
        "fbsir.model.compute_r0",
        "fbsir.model.ode_rhs",
        "fbsir.model.equilibria",
        "fbsir.model.integrate_ode",
        "fbsir.model.susceptible_envelope",
        "fbsir.model.thresholds",
        "fbsir.model.Supersolution",
        "fbsir.model.Supersolution.residuals",
        "fbsir.model.build_supersolution",
        "fbsir.model.front_speed_bound",
    ],
    "eigen.md": [
        "fbsir.eigen.EigenQuery",
        "fbsir.eigen.lambda1",
        "fbsir.eigen.critical_radius",
    ],
    "frontfix.md": [
        "fbsir.frontfix.GridSpec",
        "fbsir.frontfix.GridSpec.check_domain",
        "fbsir.frontfix.SimState",
        "fbsir.frontfix.SimState.initial",
        "fbsir.frontfix.Frame",
        "fbsir.frontfix.map_to_physical",
        "fbsir.frontfix.radial_laplacian_bands",
        "fbsir.frontfix.radial_laplacian",
        "fbsir.frontfix.advection_term",
        "fbsir.frontfix.transformed_operator",
        "fbsir.frontfix.front_gradient",
        "fbsir.frontfix.stefan_speed",
        "fbsir.frontfix.comp_to_physical",
        "fbsir.frontfix.cross_interpolate",
    ],
    "solver.md": [
        "fbsir.solver.TimeStepConfig",
        "fbsir.solver.stefan_cfl",
        "fbsir.solver.step",
        "fbsir.solver.run",
        "fbsir.solver.run_fixed_domain",
    ],
    "analysis.md": [
        "fbsir.analysis.ClassifyTolerances",
        "fbsir.analysis.RunOutcome",
        "fbsir.analysis.classify",
        "fbsir.analysis.infected_mass",
        "fbsir.analysis.mass_balance_residual",
        "fbsir.analysis.comparison_check",
        "fbsir.analysis.sweep_parameter",
        "fbsir.analysis.sweep_critical_h0",
        "fbsir.analysis.convergence_study",
    ],
    "config.md": [
        "fbsir.config.ScenarioConfig",
        "fbsir.config.ScenarioConfig.from_dict",
        "fbsir.config.ScenarioConfig.dump",
        "fbsir.config.load_scenario",
    ],
    "writer.md": [
        "fbsir.writer.Writer",
        "fbsir.writer.Writer.to_csv",
        "fbsir.writer.Writer.to_profiles",
        "fbsir.writer.Writer.to_h5",
        "fbsir.writer.Writer.to_svg",
    ],
    "utils/math.md": [
        "fbsir.utils.math.bessel_j",
        "fbsir.utils.math.first_bessel_zero",
        "fbsir.utils.math.thomas_solve",
        "fbsir.utils.math.observed_order",
    ],
    "utils/plotter.md": [
        "fbsir.utils.plotter.plot_series",
        "fbsir.utils.plotter.plot_profiles",
    ],
    "utils/misc.md": [
        "fbsir.utils.misc.check_file_exist",
        "fbsir.utils.misc.setup_logging",
        "fbsir.utils.misc.FbsirEncoder",
        "fbsir.utils.misc.FbsirArgparseFormatter",
    ],
}

# Generate documentation from the installed package
doc_generator = DocumentationGenerator(pages)
doc_generator.generate("./sources")

# Make readme as the start page
shutil.copyfile("../README.md", "sources/index.md")
shutil.copyfile("scenarios.md", "sources/scenarios.md")
shutil.copyfile("../CODE_OF_CONDUCT.md", "sources/CODE_OF_CONDUCT.md")
shutil.copyfile("../CONTRIBUTING.md", "sources/CONTRIBUTING.md")

# make the dir for bin files and run argmark
os.mkdir("sources/bin")

os.system(f"cd sources/bin; argmark -f ../../../bin/*py; cd ../")

# From the bin/*.md files make a table

mdFile = MdUtils(file_name="sources/cli", title="Command Line Interface")
mdFile.new_header(level=1, title="Overview")
mdFile.new_paragraph(
    "`fbsir` comes with a set of command line scripts. They exit with 0 on success, "
    "1 on an invalid scenario, 2 when the solver fails and 3 on an invalid sweep bracket."
)

list_of_strings = ["Script", "Description"]

for files in glob.glob("sources/bin/*md"):
    with open(files, "r") as f:
        text = f.read()
    text = text.replace("\n", " ")
    description = re.search(r"Description(.*?)\#", text).group(1).lstrip().rstrip()
    file_name = files.split("/")[-1][:-3] + ".py"
    file_link = "bin/" + os.path.basename(files)
    link = f"[{file_name}]({file_link})"
    list_of_strings.extend([link, description])

mdFile.new_line()
mdFile.new_table(
    columns=2, rows=len(list_of_strings) // 2, text=list_of_strings, text_align="left"
)
mdFile.create_md_file()

# Convert all note tabs so that it looks cooler with the material theme
linebreaker_list = ["Args:", "Examples:", "Returns:", "Attributes:", "Raises:"]

for dname, dirs, files in os.walk("sources"):
    for fname in files:
        fpath = os.path.join(dname, fname)
        with open(fpath) as f:
            s = f.read()
        s = s.replace("Note:", "!!! note")
        s = s.replace("**Note**:", "!!! note")
        for string in linebreaker_list:
            s = s.replace(string, string + " \n")
        with open(fpath, "w") as f:
            f.write(s)
