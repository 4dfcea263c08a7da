// Command-line front end: dataset generation, model training, evaluation,
// equation extraction, and metrics reporting for the pendulum benchmark.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l0sparse/l0sparse.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t seed) {
    if (opt->count() > 0) return seed;
    std::random_device rd;
    const std::uint64_t chosen = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    std::cerr << "seed: " << chosen << "\n";
    return chosen;
}

l0sparse::LibrarySpec make_library(const std::string& name, int degree, int frequencies) {
    using l0sparse::LibrarySpec;
    if (name == "polynomial") return LibrarySpec::polynomial_lib(degree);
    if (name == "fourier") return LibrarySpec::fourier_lib(frequencies);
    if (name == "polyfourier")
        return LibrarySpec::generalized_lib(
            {LibrarySpec::polynomial_lib(degree), LibrarySpec::fourier_lib(frequencies)});
    throw CLI::ValidationError("--library", "unknown library '" + name + "'");
}

struct MetricsRow {
    std::string source;
    std::size_t epochs = 0;
    double train_mse = 0.0;
    double test_mse = 0.0;
    double penalty = 0.0;
    std::size_t active_gates = 0;
};

MetricsRow read_final_metrics(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw l0sparse::DataFormatError(l0sparse::DataError::io, path + ": cannot open");
    std::string line, last;
    std::getline(is, line);
    if (line.rfind("epoch,train_mse,test_mse,penalty,active_gates", 0) != 0)
        throw l0sparse::DataFormatError(l0sparse::DataError::bad_schema,
                                        path + ": not a metrics CSV");
    std::size_t rows = 0;
    while (std::getline(is, line))
        if (!line.empty()) {
            last = line;
            ++rows;
        }
    if (rows == 0)
        throw l0sparse::DataFormatError(l0sparse::DataError::bad_schema, path + ": no data rows");
    MetricsRow row;
    row.source = path;
    row.epochs = rows;
    std::stringstream ss(last);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 6)
        throw l0sparse::DataFormatError(l0sparse::DataError::bad_schema, path + ": short row");
    row.train_mse = std::stod(fields[1]);
    row.test_mse = std::stod(fields[2]);
    row.penalty = std::stod(fields[3]);
    row.active_gates = static_cast<std::size_t>(std::stoull(fields[4]));
    return row;
}

int run_gen_data(std::size_t episodes, std::size_t steps, std::uint64_t seed, std::size_t jobs,
                 const std::string& out, const std::string& csv) {
    l0sparse::ReplayBuffer buffer = l0sparse::collect_dataset(episodes, steps, seed, jobs);
    l0sparse::save_dataset(buffer, out);
    if (!csv.empty()) l0sparse::export_csv(buffer, csv);
    std::cout << "wrote " << buffer.count() << " records to " << out << "\n";
    return 0;
}

int run_train(const std::string& model_name, const std::string& target_name,
              const std::string& library_name, int degree, int frequencies, double lambda,
              std::size_t epochs, std::size_t batch, double lr, std::uint64_t seed,
              std::size_t hdim, const std::string& train_path, const std::string& test_path,
              const std::string& out_dir) {
    using namespace l0sparse;

    const TrainTarget target =
        target_name == "reward" ? TrainTarget::reward : TrainTarget::transition;

    ModelSpec spec;
    spec.input_dim = kObsDim + kActDim;
    spec.output_dim = target == TrainTarget::transition ? kObsDim : 1;
    spec.h_dim = hdim;
    spec.gates.lambda = lambda;
    if (model_name == "fcnn") {
        spec.kind = ModelKind::fcnn;
    } else if (model_name == "sparse-fcnn") {
        spec.kind = ModelKind::sparse_fcnn;
    } else if (model_name == "l0-sindy") {
        spec.kind = ModelKind::l0_sindy;
        spec.library = make_library(library_name, degree, frequencies);
    } else {
        throw CLI::ValidationError("--model", "unknown model '" + model_name + "'");
    }

    ReplayBuffer train_buffer = load_dataset(train_path);
    ReplayBuffer test_buffer = load_dataset(test_path);

    TrainConfig cfg;
    cfg.learning_rate = lr;
    cfg.batch_size = batch;
    cfg.epochs = epochs;
    cfg.lambda = lambda;
    cfg.seed = seed;
    cfg.target = target;

    Model model(spec, seed);
    const TrainResult result = train_model(model, train_buffer, test_buffer, cfg);

    std::filesystem::create_directories(out_dir);
    const std::string ckpt = out_dir + "/model.ckpt";
    save_model(model, ckpt);
    write_model_sidecar(model, ckpt);
    write_metrics_csv(result.metrics, out_dir + "/metrics.csv");
    write_train_summary(model, cfg, result, out_dir + "/summary.json");

    if (result.aborted) {
        std::cerr << "numerical abort: " << result.diagnostic << " (rolled back to epoch "
                  << result.epochs_completed << ")\n";
        return kExitNumerical;
    }
    const EpochMetrics& last = result.metrics.epochs.back();
    std::printf("final train_mse=%.17g test_mse=%.17g active_gates=%zu\n", last.train_mse,
                last.test_mse, last.active_gates);
    return 0;
}

int run_eval(const std::string& ckpt, const std::string& data) {
    l0sparse::Model model = l0sparse::load_model(ckpt);
    l0sparse::ReplayBuffer buffer = l0sparse::load_dataset(data);
    const l0sparse::TrainTarget target = model.spec().output_dim == l0sparse::kObsDim
                                             ? l0sparse::TrainTarget::transition
                                             : l0sparse::TrainTarget::reward;
    std::printf("%.17g\n", l0sparse::evaluate(model, buffer, target));
    return 0;
}

int run_extract(const std::string& ckpt) {
    l0sparse::Model model = l0sparse::load_model(ckpt);
    const std::vector<l0sparse::Equation> equations = model.extract_equations();
    for (std::size_t o = 0; o < equations.size(); ++o)
        std::cout << "y" << o << " = " << equations[o].text << "\n";
    return 0;
}

int run_report(const std::vector<std::string>& metric_files, const std::string& json_out) {
    std::cout << "metrics,epochs,train_mse,test_mse,penalty,active_gates\n";
    nlohmann::json rows = nlohmann::json::array();
    char buf[256];
    for (const std::string& path : metric_files) {
        const MetricsRow row = read_final_metrics(path);
        std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.17g,%.17g,%zu\n", row.source.c_str(),
                      row.epochs, row.train_mse, row.test_mse, row.penalty, row.active_gates);
        std::cout << buf;
        rows.push_back({{"metrics", row.source},
                        {"epochs", row.epochs},
                        {"train_mse", row.train_mse},
                        {"test_mse", row.test_mse},
                        {"penalty", row.penalty},
                        {"active_gates", row.active_gates}});
    }
    if (!json_out.empty()) {
        std::ofstream os(json_out);
        if (!os)
            throw l0sparse::DataFormatError(l0sparse::DataError::io,
                                            json_out + ": cannot open for writing");
        os << rows.dump(2) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"L0 hard-concrete gates, sparse dictionary models, and the pendulum benchmark"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Collect a random-policy pendulum dataset");
    std::size_t episodes = 1000, steps = 200, jobs = 1;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_csv;
    gen->add_option("--episodes", episodes, "Number of episodes")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--steps", steps, "Steps per episode")->capture_default_str();
    auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "RNG seed (random if omitted)");
    gen->add_option("--jobs", jobs, "Parallel episode workers")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    gen->add_option("--out", gen_out, "Output dataset file")->required();
    gen->add_option("--csv", gen_csv, "Also export records as CSV");

    // train
    auto* train = app.add_subcommand("train", "Train a transition or reward model");
    std::string model_name = "l0-sindy", target_name = "transition", library_name = "polynomial";
    int degree = 3, frequencies = 1;
    double lambda = 1.0, lr = 1e-3;
    std::size_t epochs = 500, batch = 256, hdim = 256;
    std::uint64_t train_seed = 0;
    std::string train_path, test_path, out_dir;
    train->add_option("--model", model_name, "fcnn | sparse-fcnn | l0-sindy")
        ->check(CLI::IsMember({"fcnn", "sparse-fcnn", "l0-sindy"}))
        ->capture_default_str();
    train->add_option("--target", target_name, "transition | reward")
        ->check(CLI::IsMember({"transition", "reward"}))
        ->capture_default_str();
    train->add_option("--library", library_name, "polynomial | fourier | polyfourier")
        ->check(CLI::IsMember({"polynomial", "fourier", "polyfourier"}))
        ->capture_default_str();
    train->add_option("--degree", degree, "Polynomial degree")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--frequencies", frequencies, "Fourier frequencies")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--lambda", lambda, "L0 penalty weight")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    train->add_option("--epochs", epochs, "Training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--batch", batch, "Minibatch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--lr", lr, "Adam learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    auto* train_seed_opt = train->add_option("--seed", train_seed, "RNG seed (random if omitted)");
    train->add_option("--hdim", hdim, "Hidden width of the network models")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    train->add_option("--train", train_path, "Training dataset file")->required();
    train->add_option("--test", test_path, "Test dataset file")->required();
    train->add_option("--out", out_dir, "Output directory")->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
    std::string eval_ckpt, eval_data;
    eval_cmd->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "Dataset file")->required();

    // extract
    auto* extract_cmd = app.add_subcommand("extract", "Print the closed-form equations");
    std::string extract_ckpt;
    extract_cmd->add_option("--ckpt", extract_ckpt, "Checkpoint file")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "Combine metrics CSVs into one table");
    std::vector<std::string> metric_files;
    std::string report_json;
    report_cmd->add_option("--metrics", metric_files, "Metrics CSV files")->required();
    report_cmd->add_option("--json", report_json, "Also write the table as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return kExitUsage;
    }

    try {
        if (gen->parsed())
            return run_gen_data(episodes, steps, resolve_seed(gen_seed_opt, gen_seed), jobs,
                                gen_out, gen_csv);
        if (train->parsed())
            return run_train(model_name, target_name, library_name, degree, frequencies, lambda,
                             epochs, batch, lr, resolve_seed(train_seed_opt, train_seed), hdim,
                             train_path, test_path, out_dir);
        if (eval_cmd->parsed()) return run_eval(eval_ckpt, eval_data);
        if (extract_cmd->parsed()) return run_extract(extract_ckpt);
        if (report_cmd->parsed()) return run_report(metric_files, report_json);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const l0sparse::DataFormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const l0sparse::NumericalError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
