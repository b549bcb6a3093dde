#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "decent/gen.hpp"
#include "decent/nicheck.hpp"
#include "decent/repl.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntimeError = 1;
constexpr int kParseError = 2;
constexpr int kNiViolation = 3;
constexpr int kUsageError = 4;

int runScript(const std::string& path, std::uint64_t budget) {
  std::ifstream f(path);
  if (!f) {
    std::cerr << "cannot read " << path << "\n";
    return kUsageError;
  }
  std::stringstream buf;
  buf << f.rdbuf();
  decent::ReplSession session;
  session.budget = budget;
  try {
    decent::ExprPtr core = decent::desugar(decent::parse(buf.str()));
    decent::Value v = session.interp.eval(session.top, core, budget);
    std::cout << session.renderValue(v) << "\n";
    return kOk;
  } catch (const decent::LexError& e) {
    std::cerr << e.what() << "\n";
    return kParseError;
  } catch (const decent::ParseError& e) {
    std::cerr << e.what() << "\n";
    return kParseError;
  } catch (const decent::UnboundVariableError& e) {
    std::cerr << e.what() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return kRuntimeError;
  }
}

int runRepl(std::uint64_t budget) {
  decent::ReplSession session;
  session.budget = budget;
  std::string line;
  while (!session.quitRequested() && std::getline(std::cin, line)) {
    std::string out = session.dispatch(line);
    if (!out.empty()) std::cout << out << "\n";
  }
  return kOk;
}

int runNiSuite(std::uint64_t seed, int count, int size, std::uint64_t budget,
               bool noMembrane) {
  if (count < 1) {
    std::cerr << "--count must be at least 1\n";
    return kUsageError;
  }
  int passed = 0;
  bool printedWitness = false;
  for (int i = 0; i < count; ++i) {
    decent::NITriple t = noMembrane ? decent::mutationTriple(i)
                                    : decent::genTriple(seed + i, size);
    decent::NIReport r = decent::checkNoninterference(t.setup, t.body, t.arg,
                                                      budget, !noMembrane);
    r.seed = seed + i;
    if (r.harnessError) {
      std::cerr << "harness error on seed " << r.seed << ": " << *r.harnessError
                << "\n";
      continue;
    }
    if (r.pass) {
      ++passed;
    } else if (!printedWitness && r.witness) {
      printedWitness = true;
      std::cout << "witness (seed " << r.seed << "): " << r.witness->path << ": "
                << r.witness->left << " became " << r.witness->right << "\n";
      std::cout << "  setup: " << t.setup << "  body:  " << t.body << "\n"
                << "  arg:   " << t.arg << "\n";
    }
  }
  std::cout << passed << "/" << count << " pass\n";
  return passed == count ? kOk : kNiViolation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interpreter and transactional sandbox runtime"};
  app.require_subcommand(1);

  std::uint64_t budget = decent::Interp::kDefaultBudget;

  auto* run = app.add_subcommand("run", "evaluate a script file");
  std::string path;
  run->add_option("file", path, "script to run")->required();
  run->add_option("--step-budget", budget, "evaluation step budget");

  auto* repl = app.add_subcommand("repl", "interactive session");
  repl->add_option("--step-budget", budget, "evaluation step budget");

  auto* ni = app.add_subcommand("ni", "noninterference property suite");
  std::uint64_t seed = 1;
  int count = 1000;
  int size = 30;
  bool noMembrane = false;
  ni->add_option("--seed", seed, "base seed");
  ni->add_option("--count", count, "number of trials");
  ni->add_option("--size", size, "program size per trial");
  ni->add_option("--step-budget", budget, "evaluation step budget");
  ni->add_flag("--no-membrane", noMembrane,
               "disable wrapping and run the mutation corpus (negative control)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  if (run->parsed()) return runScript(path, budget);
  if (repl->parsed()) return runRepl(budget);
  return runNiSuite(seed, count, size, budget, noMembrane);
}
