// acfctl: merge per-IOC access security files into one gateway file and
// evaluate allow/deny decisions from the command line.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "common.hpp"
#include "pvgate/acf/acf.hpp"

using namespace pvgate;

namespace {

acf::Config read_acf(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return acf::parse_acf(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"access security file toolkit"};
  app.require_subcommand(1);

  auto* merge = app.add_subcommand("merge", "merge ACF files (the gateway file is the "
                                            "sum of the per-IOC files)");
  bool strict = false;
  std::string gateway_user, gateway_host;
  std::string out_path;
  std::vector<std::string> in_paths;
  merge->add_flag("--strict", strict, "reject same-named groups with different bodies");
  merge->add_option("--gateway-user", gateway_user,
                    "also admit this user to every UAG referenced by a WRITE rule");
  merge->add_option("--gateway-host", gateway_host,
                    "host for --gateway-user (admitted to WRITE-rule HAGs)");
  merge->add_option("out", out_path, "output file")->required();
  merge->add_option("inputs", in_paths, "input ACF files")->required()->expected(-1);

  auto* check = app.add_subcommand("check", "evaluate one access decision");
  std::string acf_path, asg = "DEFAULT", user, host, level = "read";
  check->add_option("--acf", acf_path, "ACF file")->required();
  check->add_option("--asg", asg, "access security group");
  check->add_option("--user", user, "user name")->required();
  check->add_option("--host", host, "host name")->required();
  check->add_option("--level", level, "read|write")->check(CLI::IsMember({"read", "write"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*merge) {
      std::vector<acf::Config> configs;
      for (const auto& p : in_paths) configs.push_back(read_acf(p));
      auto merged =
          acf::merge_acf(configs, strict ? acf::MergeMode::Strict : acf::MergeMode::Union);
      if (!gateway_user.empty()) {
        merged = acf::augment_for_gateway(merged, {gateway_user, gateway_host});
      }
      std::ofstream out(out_path);
      if (!out) throw std::runtime_error("cannot write " + out_path);
      out << acf::render_acf(merged);
      std::cerr << "merged " << in_paths.size() << " file(s) into " << out_path << "\n";
      return tool::kExitOk;
    }
    if (*check) {
      auto config = read_acf(acf_path);
      const auto lv = level == "write" ? acf::Level::Write : acf::Level::Read;
      auto d = acf::evaluate(config, asg, {user, host}, lv);
      if (d.allow) {
        std::cout << "ALLOW " << user << "@" << host << " " << level << " on " << asg
                  << " (rule " << d.rule_index << " of ASG " << d.asg << ")\n";
        return tool::kExitOk;
      }
      std::cout << "DENY " << user << "@" << host << " " << level << " on " << asg << "\n";
      return tool::kExitDenied;
    }
  } catch (const std::exception& e) {
    std::cerr << "acfctl: " << e.what() << "\n";
    return tool::kExitError;
  }
  return tool::kExitError;
}
