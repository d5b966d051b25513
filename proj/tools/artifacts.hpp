#pragma once

#include <filesystem>
#include <string>

namespace qrcli {

/// Collects a command's outputs in a hidden sibling directory and moves them into place on commit.
class StagedDir {
public:
    explicit StagedDir(std::filesystem::path target);
    StagedDir(const StagedDir &) = delete;
    StagedDir &operator=(const StagedDir &) = delete;
    ~StagedDir();

    void write(const std::string &name, const std::string &content);
    void commit();
    const std::filesystem::path &target() const { return target_; }

private:
    std::filesystem::path target_;
    std::filesystem::path staging_;
    bool committed_ = false;
};

std::string read_file(const std::filesystem::path &path);

} // namespace qrcli
