// Canned-response judge server for exercising the remote backend offline.

#include <CLI11.hpp>

#include <iostream>

#include "utpcr/judge_stub.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stub judge server"};
  std::string script, host = "127.0.0.1";
  int port = 8089;
  app.add_option("--script", script, "Response script (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--host", host, "Bind address");
  app.add_option("--port", port, "Port");
  CLI11_PARSE(app, argc, argv);
  try {
    auto server = utpcr::StubJudgeServer::from_file(script);
    std::cerr << "judge stub listening on " << host << ":" << port << "\n";
    server.run(host, port);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
