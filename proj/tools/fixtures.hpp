#ifndef TOOLS__FIXTURES_HPP_
#define TOOLS__FIXTURES_HPP_

#include <string>
#include <vector>

/// Built-in node programs spawned by `pt launch` / `pt run-fixture`:
///   talker     --topic T --count N --period-us P --size-bytes S
///   listener   --topic T --duration-ms D
///   pubsub     --topic T --count N --size-bytes S
///   timerload  --period-ms P --busy-ms B --duration-ms D
///   lifecycle  (configure/activate/publish/deactivate/cleanup walk)
///   fail       (creates a node, then exits 3)
/// Returns the fixture's exit code; throws std::runtime_error on bad usage.
int run_fixture(const std::string & name, const std::vector<std::string> & args);

std::vector<std::string> fixture_names();

#endif  // TOOLS__FIXTURES_HPP_
