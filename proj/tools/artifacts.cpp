#include "artifacts.hpp"

#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "handles.hpp"

namespace fs = std::filesystem;

namespace qrcli {

namespace {

void io_fail(const std::string &message) { throw ApiError(QR_IO_ERROR, message); }

} // namespace

StagedDir::StagedDir(fs::path target) : target_(std::move(target))
{
    std::error_code ec;
    fs::create_directories(target_.parent_path().empty() ? fs::path(".") : target_.parent_path(), ec);
    if (ec) {
        io_fail("cannot create " + target_.parent_path().string() + ": " + ec.message());
    }
    staging_ = target_.parent_path() / ("." + target_.filename().string() + ".staging-" + std::to_string(::getpid()));
    fs::remove_all(staging_, ec);
    fs::create_directory(staging_, ec);
    if (ec) {
        io_fail("cannot create " + staging_.string() + ": " + ec.message());
    }
}

StagedDir::~StagedDir()
{
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(staging_, ec);
    }
}

void StagedDir::write(const std::string &name, const std::string &content)
{
    const fs::path final_path = staging_ / name;
    const fs::path tmp = staging_ / (name + ".tmp");
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        os << content;
        os.flush();
        if (!os) {
            io_fail("cannot write " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) {
        io_fail("cannot rename " + tmp.string() + ": " + ec.message());
    }
}

void StagedDir::commit()
{
    std::error_code ec;
    const fs::path old = target_.parent_path() / ("." + target_.filename().string() + ".old-" + std::to_string(::getpid()));
    const bool had_previous = fs::exists(target_);
    if (had_previous) {
        fs::rename(target_, old, ec);
        if (ec) {
            io_fail("cannot move aside " + target_.string() + ": " + ec.message());
        }
    }
    fs::rename(staging_, target_, ec);
    if (ec) {
        if (had_previous) {
            std::error_code restore;
            fs::rename(old, target_, restore);
        }
        io_fail("cannot publish " + target_.string() + ": " + ec.message());
    }
    committed_ = true;
    if (had_previous) {
        fs::remove_all(old, ec);
    }
}

std::string read_file(const fs::path &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace qrcli
