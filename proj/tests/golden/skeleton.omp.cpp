extern "C" void skeleton(const int *occaDims){
  int occaInnerId0 = 0, occaInnerId1 = 0, occaInnerId2 = 0;
  int occaOuterId0 = 0, occaOuterId1 = 0, occaOuterId2 = 0;
  {
    for(occaOuterId1 = 0; occaOuterId1 < occaDims[4]; ++occaOuterId1){
      _Pragma("omp parallel for
              firstprivate(occaInnerId0, occaInnerId1, occaInnerId2,
                           occaDims0   , occaDims1   , occaDims2)")
      for(occaOuterId0 = 0; occaOuterId0 < occaDims[3]; ++occaOuterId0){
        for(occaInnerId2 = 0; occaInnerId2 < occaDims[2]; ++occaInnerId2){
          for(occaInnerId1 = 0; occaInnerId1 < occaDims[1]; ++occaInnerId1){
            for(occaInnerId0 = 0; occaInnerId0 < occaDims[0]; ++occaInnerId0){
        }}}
  }}}
}
