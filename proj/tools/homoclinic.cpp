// Command-line front end: audit, solve, sweep and figures pipelines.

#include <iostream>

#include "homoclinic/cli.hpp"
#include "homoclinic/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace homoclinic;
  RunConfig cfg;
  try {
    cfg = parse_config(argc, argv);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "homoclinic: " << e.what() << "\n";
    return kExitUsage;
  }
  try {
    return run_pipeline(cfg, std::cout);
  } catch (const UsageError& e) {
    std::cerr << "homoclinic: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "homoclinic: " << e.what() << "\n";
    return kExitUsage;
  } catch (const GeometryError& e) {
    std::cerr << "homoclinic: " << e.what() << "\n";
    return kExitUnconverged;
  } catch (const DivergenceError& e) {
    std::cerr << "homoclinic: " << e.what() << "\n";
    return kExitUnconverged;
  } catch (const std::exception& e) {
    std::cerr << "homoclinic: " << e.what() << "\n";
    return kExitFailure;
  }
}
