// harness: run desk-scale topology and failure experiments from a
// scenario file and turn the reports into CSV and SVG.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "common.hpp"
#include "pvgate/harness/report.hpp"
#include "pvgate/harness/runner.hpp"
#include "pvgate/util/format.hpp"

using namespace pvgate;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    if (!piece.empty()) out.push_back(piece);
  }
  return out;
}

void write_summary(const harness::RunReport& report, std::ostream& out) {
  out << "scenario: " << report.spec.iocs << " IOC(s), " << report.spec.pvs_per_ioc
      << " PVs each @ " << report.spec.period_ms << " ms, "
      << report.spec.clients_per_ioc << " public client(s) per IOC, "
      << report.spec.critical_clients << " critical\n";
  for (const auto& v : report.variants) {
    out << "variant " << v.name << ": mean IOC fds " << v.mean_ioc_fds
        << ", mean IOC cpu_proxy " << util::format_fixed(v.mean_ioc_cpu, 4)
        << ", IOC connections " << v.mean_ioc_connections << "\n";
    if (!v.samples.empty()) {
      std::uint64_t refused = 0;
      for (const auto& ioc : v.samples.back().iocs) refused += ioc.refused_connections;
      if (refused > 0) {
        out << "variant " << v.name << ": " << refused
            << " connection(s) refused at the fd limit\n";
      }
    }
  }
  if (report.variant("direct")) {
    out << "fd reduction: " << util::format_fixed(report.fd_reduction_pct, 2) << "%\n";
    out << "cpu reduction: " << util::format_fixed(report.cpu_reduction_pct, 2) << "%\n";
  }
  for (const auto& v : report.variants) {
    for (const auto& log : v.clients) {
      if (log.interruption_seconds > 0 || log.saw_invalid) {
        out << "client " << log.id << " (" << v.name << "): interruption "
            << util::format_fixed(log.interruption_seconds, 2) << " s"
            << (log.recovered ? ", recovered" : "") << "\n";
      }
    }
  }
  if (report.ok()) {
    out << "all scenario assertions hold\n";
  } else {
    for (const auto& f : report.assertion_failures) out << "ASSERTION FAILED: " << f << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"topology comparison and failure injection harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run a scenario and write reports");
  std::string scenario_path, out_dir;
  run->add_option("--scenario", scenario_path, "scenario INI file")->required();
  run->add_option("--out", out_dir, "output directory")->required();

  auto* chart = app.add_subcommand("chart", "render columns of a report CSV as SVG");
  std::string in_csv, out_svg, columns = "event_rate,post_rate";
  chart->add_option("--in", in_csv, "input CSV")->required();
  chart->add_option("--out", out_svg, "output SVG")->required();
  chart->add_option("--columns", columns, "comma-separated column names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto spec = harness::parse_scenario(slurp(scenario_path));
      auto report = harness::run_scenario(spec);
      std::filesystem::create_directories(out_dir);
      for (const auto& v : report.variants) {
        harness::emit_csv(v, out_dir + "/" + v.name + ".csv");
      }
      // report.csv is the served-by-gateway time series, the one the
      // wall display would chart.
      const harness::VariantReport* main_variant = report.variant("gateway");
      if (!main_variant) main_variant = report.variant("failure");
      if (main_variant) {
        harness::emit_csv(*main_variant, out_dir + "/report.csv");
        harness::render_chart(out_dir + "/report.csv", out_dir + "/fig.svg",
                              {"alive_pvs", "active_pvs", "event_rate", "post_rate"});
      }
      std::ofstream summary(out_dir + "/summary.txt");
      write_summary(report, summary);
      write_summary(report, std::cout);
      return report.ok() ? tool::kExitOk : tool::kExitError;
    }
    if (*chart) {
      harness::render_chart(in_csv, out_svg, split_csv(columns));
      std::cout << "wrote " << out_svg << "\n";
      return tool::kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "harness: " << e.what() << "\n";
    return tool::kExitError;
  }
  return tool::kExitError;
}
