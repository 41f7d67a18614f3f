#include <cstdio>
#include <filesystem>
#include <iostream>

#include "cli_common.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/version.hpp"

int main(int argc, char** argv) {
    using namespace ilens;
    CLI::App app{"Induction-head and relation-index analysis toolkit"};
    app.set_version_flag("--version", std::string(version()));
    app.require_subcommand(1);
    app.fallthrough();

    cli::GlobalOptions global;
    app.add_option("--seed", global.seed, "Root seed for all randomness")->capture_default_str();
    app.add_flag("--deterministic", global.deterministic, "Single-threaded, bitwise-reproducible execution");

    cli::register_data_commands(app, global);
    cli::register_analyze_commands(app, global);
    cli::register_report_commands(app, global);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const cli::ExitCode& e) {
        return e.code;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 2;
    } catch (const CorruptionError& e) {
        std::cerr << "corrupt input: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
