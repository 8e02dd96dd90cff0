#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "quadrant/mock_server.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Scripted OpenAI-compatible mock server for offline audits"};
    std::string fixture;
    std::string port_file;
    bool detach = false;
    app.add_option("--fixture", fixture, "Rule fixture JSON (optional)");
    app.add_option("--port-file", port_file,
                   "Write the bound port to this file once listening");
    app.add_flag("--detach", detach, "Ignore stdin; serve until the process is killed");
    CLI11_PARSE(app, argc, argv);

    quadrant::mock::MockServer server =
        fixture.empty() ? quadrant::mock::MockServer() : quadrant::mock::MockServer(fixture);
    server.start();
    std::cout << "listening on " << server.base_url() << std::endl;
    if (!port_file.empty()) {
        std::ofstream out(port_file);
        out << server.port() << "\n";
    }

    if (detach) {
        // Serve until killed; useful when stdin is /dev/null.
        for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
    }
    // Serve until stdin closes, so a parent process can end it cleanly.
    std::string line;
    while (std::getline(std::cin, line)) {
    }
    server.stop();
    return 0;
}
