#include "steatosis/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "steatosis/errors.hpp"

namespace steatosis {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

nlohmann::json model_conventions() {
    auto names = nlohmann::json::array();
    for (const auto& f : feature_registry()) names.push_back(std::string(f.name));
    return {{"feature_order", names},
            {"sex_encoding", {{"F", 0}, {"M", 1}}},
            {"scaler_std", "population"},
            {"degenerate_feature_value", 0},
            {"label_tie_break", "lowest class index"},
            {"layer1_aggregate", "soft vote"},
            {"inter_layer_signal", "class probability vectors, raw features first, members in canonical order"},
            {"svm_probabilities", "softmax over one-vs-rest decision values"},
            {"classes", kClassCount}};
}

nlohmann::json container_json(const CascadeModel& model) {
    auto members = nlohmann::json::array();
    for (const auto& m : model.layer1().members) members.push_back(hex64(m.spec().hash()));
    return {{"format", "steatosis-cascade"},
            {"format_version", {{"major", kFormatMajor}, {"minor", kFormatMinor}}},
            {"tool_version", std::string(kToolVersion)},
            {"conventions", model_conventions()},
            {"spec_hashes",
             {{"layer1", members},
              {"layer2", hex64(model.layer2().network.spec().hash())},
              {"layer3", hex64(model.layer3().network.spec().hash())}}},
            {"model", model.to_json()}};
}

CascadeModel model_from_container(const nlohmann::json& j) {
    try {
        if (!j.is_object() || j.value("format", "") != "steatosis-cascade")
            throw ContainerError("corrupt container: not a steatosis model");
        const int major = j.at("format_version").at("major").get<int>();
        if (major > kFormatMajor)
            throw ContainerError("unsupported container version " + std::to_string(major) + " (this build reads up to " +
                                 std::to_string(kFormatMajor) + ")");
        if (j.at("conventions") != model_conventions())
            throw ContainerError("container conventions differ from this build");
        return CascadeModel::from_json(j.at("model"));
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(std::string("corrupt container: ") + e.what());
    } catch (const ContainerError&) {
        throw;
    } catch (const std::exception& e) {
        throw ContainerError(std::string("corrupt container: ") + e.what());
    }
}

std::string dump_json(const nlohmann::json& j) { return j.dump(1) + "\n"; }

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot move " + tmp.string() + " to " + path.string());
    }
}

void save_model(const std::filesystem::path& path, const CascadeModel& model) {
    write_file_atomic(path, dump_json(container_json(model)));
}

CascadeModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ContainerError(std::string("corrupt container: ") + e.what());
    }
    return model_from_container(j);
}

}  // namespace steatosis
